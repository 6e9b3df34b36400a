"""Numerical tolerances shared by every module.

All of these are absolute unless stated otherwise.
"""

# Relative factor for numeric rank: sigma > sigma_max * max(rows, cols) * RANK_RTOL.
RANK_RTOL = 1e-12
# Absolute floor for numeric rank (a matrix with sigma_max below this has rank 0).
RANK_ATOL = 1e-12

# Equality residual accepted by the LP feasibility test (per row, after row scaling).
LP_FEAS_TOL = 1e-7
# Box-bound slack accepted for LP witnesses.
LP_BOUND_TOL = 1e-9
# Reduced-cost optimality tolerance for the simplex.
LP_OPT_TOL = 1e-9
# Smallest pivot magnitude accepted in the ratio test.
LP_PIVOT_TOL = 1e-10

# Strict margin for the Schur stability verdict: rho < 1 - SCHUR_MARGIN.
SCHUR_MARGIN = 1e-9

# Membership tolerance used by containment queries (same band as LP feasibility).
MEMBERSHIP_TOL = LP_FEAS_TOL
