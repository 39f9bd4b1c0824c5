"""The single defaults table.

Every tolerance, grid size and search range used anywhere in the package is
defined here so that reports are reproducible across machines.  The README
documents this table; config files override individual entries.
"""

# Radial shooting
ODE_RTOL = 1e-11            # relative tolerance of the adaptive RK 5(4) integrator
ODE_ATOL = 1e-13            # absolute tolerance
SCAN_RTOL = 1e-8            # looser tolerance used only for bracket scanning
SCAN_ATOL = 1e-10
R0_FACTOR = 1e-6            # series start at r0 = R0_FACTOR * R (singular axis term)
RESAMPLE_POINTS = 2049      # uniform grid for downstream Simpson quadrature
ALPHA_GRID = (1e-3, 1e3, 61)  # logarithmic bracket search grid for alpha
MAX_BISECT = 200
RADIUS_TOL = 1e-9           # bisection stops when |rho(alpha) - R| <= RADIUS_TOL
BLOWUP_BOUND = 1e8          # |u| or |du| beyond this terminates as blow-up
MAX_NEWTON = 50             # pair shooting Newton iterations
BOUNDARY_TOL = 1e-10        # pair shooting accepts when |u(R)|,|v(R)| <= BOUNDARY_TOL
FD_STEP_REL = 1e-6          # finite-difference Jacobian step 1e-6 * (1 + |alpha|)
DAMPING_HALVINGS = 8
PAIR_GRID = (1e-2, 1e2, 13)  # logarithmic (alpha, beta) start-search grid

# Rectangle grid solver
GRID_N = 256                # intervals per side; 257 nodes (Simpson needs even intervals)
NEWTON_TOL = 1e-10          # residual max-norm
NEWTON_MAX_ITER = 30
CONTINUATION_STEPS = 5      # load-factor steps tried when plain Newton stalls
DIRECT_SOLVE_MAX_N = 256    # direct sparse solve up to 257 nodes per side, CG beyond
CG_TOL = 1e-12
CG_MAX_ITER = 20000

# Identity verifiers
EQUATION_RESIDUAL_GATE = 1e-4   # max-norm PDE residual above which reports are flagged
REL_RESIDUAL_FLOOR = 1e-30      # normalization floor for relative residuals
RESIDUAL_STUDY_LEVELS = (257, 513)  # grid sizes for differential-form order estimates
BOUNDARY_SAMPLE_COUNT = 64      # boundary points sampled for the normalization check

# Criteria
ALPHA_SEARCH_RANGE = (-2.0, 3.0)
ALPHA_SEARCH_COUNT = 501        # per axis for m = 1; reduced for m = 2, 3
ALPHA_SEARCH_COUNT_M2 = 41
ALPHA_SEARCH_COUNT_M3 = 11
SAMPLE_RANGE = (1e-4, 1e4)      # logarithmic (u, v) sample range
SAMPLE_COUNT = 33               # per variable for m = 1
SAMPLE_COUNT_M2 = 9
SAMPLE_COUNT_M3 = 5
SPATIAL_SAMPLE_COUNT = 21       # radii (ball) or points per axis (rectangle)
STRICTNESS_TOL = 1e-12          # inequality margins below this scale are Inconclusive

# Verification gate and sweep budgets
VERIFY_GATE = 1e-5
PROBE_HORIZON_FACTOR = 50.0     # probe integrates to 50 * R
PROBE_STARTS = 25               # log-spaced starts per probe
PROBE_RTOL = 1e-8
PROBE_ATOL = 1e-10
SWEEP_HYPERBOLA_SAMPLES = 256   # polyline resolution of the critical curve overlay

# Antiderivative numeric fallback
QUAD_ABS_TOL = 1e-12            # adaptive Gauss-Kronrod absolute tolerance
