//! Text for `monostab models`.

pub struct FamilyInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

pub const FAMILIES: [FamilyInfo; 5] = [
    FamilyInfo {
        name: "ar1",
        summary: "vector AR(1): X' = A X + V on R^n",
        text: "\
state space: R^n          shocks: n marginals, shock space R^n
params:
  a: n x n matrix (list of rows), entries >= 0 (monotone map)
notes:
  ||A||_inf = max row sum of |a_ij|. ||A||_inf < 1 makes every w(., v) a
  max-norm contraction with constant ||A||_inf; the contraction route uses it.
  Default pair: the 0.75 and 0.25 marginal quantiles.",
    },
    FamilyInfo {
        name: "rca1",
        summary: "random-coefficient AR(1): X' = Y f(X) + Z on [0, inf)",
        text: "\
state space: [0, inf)     shocks: (Y, Z), shock space [0, inf)^2
params:
  f: increasing function with slopes <= 1 and f(0) >= 0
     {\"kind\": \"identity\"} | {\"kind\": \"linear\", \"slope\": s}
     | {\"kind\": \"piecewise_linear\", \"knots\": [[x, y], ...]}
notes:
  E[Y] < 1 is recorded as a tightness heuristic (metadata tightness_heuristic).
  Lipschitz constant of w(., (y, z)) is y Lip(f).",
    },
    FamilyInfo {
        name: "portfolio",
        summary: "two-asset wealth: X' = (1+R1) g1(X) + (1+R2) g2(X) + Z, floored at 0",
        text: "\
state space: [0, inf)     shocks: (R1, R2, Z), shock space (-1, inf)^2 x R
params:
  g1, g2: increasing functions (same forms as rca1 f), g1 + g2 <= x checked on
          the grid [0, grid_max] with grid_points points
  grid_max (default 100), grid_points (default 1000)
notes:
  Negative wealth is cut to 0, which keeps the map increasing.",
    },
    FamilyInfo {
        name: "resource",
        summary: "resource allocation: X'_i = sum_j sum_l c_ijl X_l^d_ijl + V_i on [0, inf)^n",
        text: "\
state space: [0, inf)^n   shocks: n marginals, shock space [0, inf)^n
params:
  c, d: arrays indexed [resource i][firm j][input l], entries in (0, 1)
notes:
  Each coordinate is strictly concave in x, so the concave route applies with a
  bracket a < b where w(a, .) > a and w(b, .) < b.",
    },
    FamilyInfo {
        name: "piecewise_exp",
        summary: "X' = f(X) + V with f(x) = e^x + delta (x <= c), alpha sqrt(x - c + beta) + gamma (x > c)",
        text: "\
state space: R            shocks: one marginal with support [a, b], a < 0 < b
params:
  delta > -1, c > 0, alpha > 0 (default 1), beta > 0 (default 1)
  v_prime: optional upper shock of the default pair (default: 0.75 quantile)
  search_cap: bound on the search for b_c (default 1e12)
notes:
  gamma is chosen so that f is continuous at c. b_c > c with
  g(b_c) <= b_c - v' is recorded in metadata. Default pair: (v', 0).",
    },
];

pub fn find(name: &str) -> Option<&'static FamilyInfo> {
    FAMILIES.iter().find(|f| f.name == name)
}
