# kherd/constants.py
"""
Centralized constants for the kernel herding engine.
All magic strings, numbers, and default values should be defined here.
"""


class Environment:
    """Supported runtime environments."""
    DEVELOPMENT = 'development'
    PRODUCTION = 'production'
    TESTING = 'testing'
    DEFAULT = DEVELOPMENT


class Mode:
    """Herding modes."""
    CONTINUOUS = 'continuous'
    DISCRETE = 'discrete'
    SUPPORTED = [CONTINUOUS, DISCRETE]


class Provenance:
    """Where a mean map comes from."""
    ANALYTIC_GM = 'analytic-gm'
    EMPIRICAL = 'empirical'


class Estimator:
    """Estimator labels used in error traces."""
    HERDING = 'herding'
    IID = 'iid'
    SUBSAMPLE = 'subsample'
    RANDOM = 'random'


class TruthKind:
    """Ground truth provenance."""
    ANALYTIC = 'analytic'
    MONTE_CARLO = 'monte-carlo'
    EMPIRICAL = 'empirical'


class NumericTolerance:
    """Tolerances shared by the numerics layer."""
    SYMMETRY_RTOL = 1e-12
    PIVOT_FLOOR = 1e-12      # relative to max diagonal
    CHOLESKY_JITTER = 1e-10
    PSD_EIGEN_FLOOR = 1e-10  # negative eigenvalues below this (relative) are round-off
    FLOAT_FORMAT = '.17g'


class KernelDefaults:
    """Kernel settings."""
    MEDIAN_HEURISTIC_DRAWS = 1000
    CHUNK_BYTES = 64 * 1024 * 1024  # per kernel block against the whole sample set


class TargetDefaults:
    """Random mixture generation settings."""
    MEAN_LOW = 0.0
    MEAN_HIGH = 10.0
    COVARIANCE_SCALE = 1.0
    COVARIANCE_JITTER = 1e-3
    MAX_MOMENT_ORDER = 3
    WEIGHT_SUM_TOL = 1e-12


class HerdingDefaults:
    """Herding engine settings."""
    N_SEEDS = 50
    MAX_ITER = 100
    GRAD_TOL_FACTOR = 1e-8    # tolerance = factor * sigma
    STEP_FACTOR = 0.5         # initial step = factor * sigma**2
    MAX_HALVINGS = 50
    TIE_BREAK = 'lowest-index'
    VERIFY_RTOL = 1e-9
    LOG_EVERY = 100


class EvaluationDefaults:
    """Evaluation settings."""
    GROUND_TRUTH_DRAWS = 10_000_000
    GROUND_TRUTH_CHUNK = 1_000_000
    MIN_FIT_POINTS = 10
    IID_REPEATS = 10
    KH_SLACK = 1e-9
    FUNCTIONS = ['moment1', 'moment2', 'moment3', 'sin_norm']


class PosteriorDefaults:
    """Posterior pipeline settings."""
    PRIOR_VAR = 100.0
    THIN = 100
    N_KEEP = 5000
    BURN_IN = 1000
    N_TRAIN = 3000
    ACCEPT_LOW = 0.2
    ACCEPT_HIGH = 0.4
    PILOT_STEPS = 500
    MAX_TUNING_ROUNDS = 20
    INITIAL_PROPOSAL_SCALE = 0.1
    EIGEN_FLOOR = 1e-10
    SUBSET_REPEATS = 10
    DECISION_THRESHOLD = 0.5
    ACCURACY_TOL = 0.005
    DATASET_SIGMA = 10.0     # kernel bandwidth in whitened units for CSV datasets
    SYNTHETIC_DIM = 10
    SYNTHETIC_TRAIN = 2000
    SYNTHETIC_TEST = 1000


class ExitCode:
    """Process exit codes."""
    OK = 0
    UNEXPECTED = 1
    CONFIG_ERROR = 2
    NUMERIC_ERROR = 3


class RngStream:
    """Named sub-streams derived from the run seed."""
    TARGET = 1
    HERDING = 2
    IID = 3
    GROUND_TRUTH = 4
    SPLIT = 5
    MCMC = 6
    BOOTSTRAP = 7
    KERNEL = 8
    REFERENCE = 9
    FUNCTIONS = 10


class ArtifactName:
    """Output file names."""
    SAMPLES = 'samples.csv'
    SAMPLES_MANIFEST = 'samples.json'
    ERROR_TRACE = 'error_trace.csv'
    IID_SAMPLES = 'iid_samples.csv'
    TARGET = 'target.json'
    TRACES = 'traces.csv'
    RATES = 'rates.json'
    CHAIN = 'chain.csv'
    CHAIN_MANIFEST = 'chain.json'
    RMSE_TRACES = 'rmse_traces.csv'
    ACCURACY_TRACES = 'accuracy_traces.csv'
    POSTERIOR_SUMMARY = 'posterior_summary.json'
    RUN_MANIFEST = 'manifest.json'


class LogMessage:
    """Standardized log messages."""
    # Application
    APP_STARTUP = "Kernel herding engine startup ({env})"
    COMMAND_START = "Running command {command} with seed {seed}"
    COMMAND_DONE = "Command {command} finished in {duration:.2f}s"

    # Numerics
    CHOLESKY_JITTER = "Near-singular matrix (min pivot {pivot:.3e}); retrying with jitter {jitter:.1e}"

    # Kernels
    MEDIAN_SIGMA = "Median heuristic bandwidth: sigma={sigma:.6g} from {n} points"

    # Herding
    HERDING_START = "Herding {mode} mode: T_max={t_max}, sigma={sigma:.6g}"
    HERDING_STEP = "Step {t}: objective={objective:.10g} error={error:.6e}"
    HERDING_PROGRESS = "Herding progress {t}/{t_max}: E_T={error:.6e}"
    HERDING_DONE = "Herding finished: T={t}, E_T={error:.6e}"
    ASCENT_STALLED = "Gradient ascent stalled at round-off after {iters} iterations (|grad|={grad:.3e})"
    CACHE_VERIFIED = "Cache check at T={t}: incremental={incremental:.12e} brute={brute:.12e}"

    # Evaluation
    GROUND_TRUTH = "Ground truth for {function}: {value:.10g} (stderr {stderr:.3e}, {n} draws)"
    RATE_FIT = "Rate fit {estimator}/{function}: slope={slope:.4f} r2={r2:.4f}"

    # Posterior
    DATASET_LOADED = "Loaded dataset {path}: {rows} rows, {features} features"
    WHITENED = "Whitened {n} rows: retained {retained}/{dim} dimensions"
    PROPOSAL_TUNED = "Proposal scale tuned to {scale:.4g} (pilot acceptance {rate:.3f})"
    CHAIN_DONE = "MH chain: kept {kept} draws, acceptance {rate:.3f}"

    # Error messages
    ERROR_UNHANDLED = "Unhandled exception: {error}\n{traceback}"


class ErrorMessage:
    """User-facing error messages."""
    NOT_POSITIVE_DEFINITE = "Matrix is not positive definite (pivot {pivot:.3e})"
    NOT_SYMMETRIC = "Matrix is not symmetric (max asymmetry {gap:.3e})"
    NON_FINITE = "Vector contains NaN or Inf entries"
    DIMENSION_MISMATCH = "Dimension mismatch: expected {expected}, got {got}"
    EMPTY_DISTRIBUTION = "Empirical distribution has no points"
    EMPTY_INPUT = "Input has no rows"
    RAGGED_ROWS = "Row {row} has {got} columns, expected {expected}"
    UNSUPPORTED_ORDER = "Moment order {order} is not supported (use 1, 2 or 3)"
    INVALID_WEIGHTS = "Mixture weights must be non-negative and sum to 1"
    ASCENT_DIVERGED = "Gradient ascent decreased the objective by {drop:.3e} at every step size"
    EMPTY_CANDIDATES = "Discrete herding needs a non-empty candidate set"
    EMPTY_HISTORY = "Herding error is undefined before the first sample"
    CACHE_INCONSISTENCY = "Incremental error {incremental:.12e} differs from brute {brute:.12e} at T={t}"
    EMPTY_SAMPLES = "No samples to evaluate"
    DEGENERATE_TRACE = "Error trace is degenerate: {reason}"
    KERNEL_MISMATCH = "Function kernel (sigma={got}) differs from herding kernel (sigma={expected})"
    PARSE_ERROR = "Row {row}: cannot parse '{value}' as a number"
    EMPTY_FILE = "File {path} is empty"
    NON_BINARY_LABEL = "Row {row}: label '{value}' is not 0 or 1"
    DEGENERATE_DATA = "All covariance eigenvalues are below the floor"
    EMPTY_THETA_SET = "Parameter set is empty"
    EMPTY_SET = "{name} set is empty"
    MISSING_FILE = "File not found: {path}"
    UNKNOWN_KEY = "Unknown configuration key '{key}'"
    INVALID_VALUE = "Invalid value for '{field}': {reason}"


# Default experiment configuration, keyed by flag name
DEFAULT_CONFIG = {
    'seed': 0,
    'out': 'runs',
    'T': 200,
    'dim': 2,
    'components': 20,
    'sigma': None,
    'target': None,
    'mean_low': TargetDefaults.MEAN_LOW,
    'mean_high': TargetDefaults.MEAN_HIGH,
    'cov_scale': TargetDefaults.COVARIANCE_SCALE,
    'n_seeds': HerdingDefaults.N_SEEDS,
    'max_iter': HerdingDefaults.MAX_ITER,
    'unique': False,
    'input': None,
    'functions': ','.join(EvaluationDefaults.FUNCTIONS),
    't_grid': None,
    'iid_repeats': EvaluationDefaults.IID_REPEATS,
    'ground_truth_draws': EvaluationDefaults.GROUND_TRUTH_DRAWS,
    'preset': None,
    'empirical': 0,
    'dataset': None,
    'synthetic': False,
    'keep': PosteriorDefaults.N_KEEP,
    'thin': PosteriorDefaults.THIN,
    'burn_in': PosteriorDefaults.BURN_IN,
    'prior_var': PosteriorDefaults.PRIOR_VAR,
    'proposal_scale': None,
    'bias': True,
    'subset_repeats': PosteriorDefaults.SUBSET_REPEATS,
    'reference_keep': 0,
    'n_train': PosteriorDefaults.N_TRAIN,
}

# Named experiment presets
PRESETS = {
    'moments-5d': {'dim': 5, 'components': 100},
    # narrow enough that the mean map stays below 1/(T+1), so consecutive samples never coincide
    'scatter-2d': {'dim': 2, 'components': 20, 'T': 20, 'sigma': 0.05},
}
