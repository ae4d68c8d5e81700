import mpmath as mp

# reference values in tests, including module-level fixtures, are built at
# this precision
mp.mp.prec = 256
