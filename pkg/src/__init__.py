# ##################################################################
# its source package
# iterative extractive summarizer built on numpy
