LOG_LEVEL = 'INFO'

# preprocessing: columns are always centered, STANDARDIZE also scales them to unit sd
STANDARDIZE = True
# compute the poly2 embedding on the raw series, then standardize the embedded columns
EMBED_FIRST = True

# Gibbs sampler
ITERS = 5000
# None means half of ITERS
BURN_IN = None
THIN = 1
MIN_SEG = 30
# gaussian or horseshoe
PRIOR = 'gaussian'
GAUSSIAN_PRIOR_VARIANCE = 3.0
# segment or uniform
KAPPA_PRIOR = 'segment'
# use the fast coefficient update when p > FAST_PATH_THRESHOLD * N
FAST_PATH_THRESHOLD = 1.0

# selection of the number of changepoints
L_FITTED = 5
SELECTION_ALPHA = 0.05
SELECTION_TAU = 0.5
HOLDOUT_STRIDE = 5

# parallel tempering, used when --temper is given without explicit powers
TEMPER_POWERS = None
TEMPER_MIN_POWER = 0.1

# posterior summaries
CREDIBLE_GAMMA = 0.05

# benchmark defaults
BENCH_ITERS = 5000
BENCH_BURN_IN = 2500
BENCH_MIN_SEG = 30
BENCH_L_FITTED = 5
BENCH_ALPHA = 0.1
BENCH_PRIOR = 'horseshoe'

OUTPUT_DIR = 'output'

# How many tasks (chains, benchmark replicates) to keep in flight at a time.
# The CPU work of every task runs in the gevent hub threadpool, capped by --threads.
WORKER_POOL_SIZE = 32
