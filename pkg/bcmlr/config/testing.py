ENV = 'testing'
TESTING = True

ITERS = 200
BURN_IN = 100
MIN_SEG = 10
BENCH_ITERS = 200
BENCH_BURN_IN = 100
WORKER_POOL_SIZE = 4
