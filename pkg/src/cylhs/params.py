"""Problem parameters, admissibility checks, and tolerance configuration.

The central object is the triple (N, k, sigma): ambient dimension, dimension
of the singular submanifold, and the strength of the cylindrical weight
|z|^(-sigma).  The derived critical exponent

    crit_exp = 2 (N - sigma) / (N - 2)

is always recomputed from the triple, never stored independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ParameterError(ValueError):
    """Raised when (N, k, sigma) violates an admissibility bound."""


@dataclass(frozen=True)
class ProblemParams:
    """The triple (N, k, sigma) governing every computation.

    N : ambient dimension, integer >= 3
    k : submanifold dimension, integer, 0 <= k <= N - 2
    sigma : singularity exponent, 0 < sigma < 2
    """

    N: int
    k: int
    sigma: float

    @property
    def crit_exp(self) -> float:
        """Critical exponent 2 (N - sigma) / (N - 2), recomputed on access."""
        return 2.0 * (self.N - self.sigma) / (self.N - 2.0)

    @property
    def m(self) -> int:
        """Codimension N - k (dimension of the normal variable z)."""
        return self.N - self.k


def make_params(N: int, k: int, sigma: float) -> ProblemParams:
    """Validate and build a :class:`ProblemParams`.

    Raises
    ------
    ParameterError
        naming the violated bound, e.g. ``"sigma out of range"``.
    """
    if int(N) != N or N < 3:
        raise ParameterError(f"N out of range: N = {N} must be an integer >= 3")
    if int(k) != k or k < 0 or k > N - 2:
        raise ParameterError(
            f"k out of range: k = {k} must satisfy 0 <= k <= N - 2 = {N - 2}"
        )
    if not (0.0 < sigma < 2.0):
        raise ParameterError(f"sigma out of range: sigma = {sigma} not in (0, 2)")
    p = ProblemParams(int(N), int(k), float(sigma))
    # derived-exponent window 2 < 2*_sigma < 2N/(N-2) is automatic for
    # sigma in (0, 2); check up to rounding so a regression cannot slip through
    assert 2.0 - 1e-12 < p.crit_exp < 2.0 * N / (N - 2.0) + 1e-12
    return p


def require_criterion_branch(params: ProblemParams) -> str:
    """Map admissible (N, k) to the criterion evaluator branch.

    Returns one of ``"general"`` (N >= 5, 2 <= k <= N-2), ``"n4"``
    (N = 4, k = 2) or ``"k1"`` (k = 1, N >= 4).  Everything else is
    rejected: k = 0 is admitted only for ground-state oracle tests and
    N = 3 requires the out-of-scope mass criterion.
    """
    if params.k == 0:
        raise ParameterError("k = 0 admits no existence criterion branch")
    if params.N == 3:
        raise ParameterError("mass criterion out of scope for N = 3")
    if params.k == 1:
        return "k1"
    if params.N == 4:
        return "n4"
    return "general"


DEFAULT_EPS_LADDER = (0.1, 0.07, 0.05, 0.035, 0.025)


@dataclass(frozen=True)
class ToleranceConfig:
    """Shared numerical tolerances.

    quad_rel_tol : relative quadrature tolerance
    solver_tol   : stopping threshold for the weighted Euler-Lagrange
                   residual of the ground-state solver
    fit_tol      : relative residual tolerance for asymptotic order fits
    eps_ladder   : decreasing sequence of scale factors; the verification
                   layer multiplies them by the cutoff radius of the
                   tubular neighborhood under study
    """

    quad_rel_tol: float = 1e-3
    solver_tol: float = 1e-6
    fit_tol: float = 0.05
    eps_ladder: tuple = field(default=DEFAULT_EPS_LADDER)

    def __post_init__(self):
        for name in ("quad_rel_tol", "solver_tol", "fit_tol"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be strictly positive")
        ladder = tuple(float(e) for e in self.eps_ladder)
        if len(ladder) < 4:
            raise ParameterError("eps_ladder needs at least 4 entries")
        if any(a <= b for a, b in zip(ladder, ladder[1:])):
            raise ParameterError("eps_ladder must be strictly decreasing")
        if ladder[-1] <= 0:
            raise ParameterError("eps_ladder entries must be positive")
        object.__setattr__(self, "eps_ladder", ladder)


class ConfigError(ValueError):
    """Raised on malformed run-configuration files (reports line numbers)."""


_CONFIG_KEYS = {
    "N": int,
    "k": int,
    "sigma": float,
    "n_s": int,
    "n_r": int,
    "s_max": float,
    "r_max": float,
    "quad_rel_tol": float,
    "solver_tol": float,
    "eps_ladder": str,
}


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse a plain-text ``key = value`` run configuration.

    Recognized keys: N, k, sigma, n_s, n_r, s_max, r_max, quad_rel_tol,
    solver_tol, eps_ladder (comma-separated floats).  Lines starting with
    ``#`` and blank lines are ignored.  Unknown keys and unparsable values
    raise :class:`ConfigError` with the offending line number.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line:
            key, _, val = line.partition("=")
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
            key, val = parts
        key, val = key.strip(), val.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        caster = _CONFIG_KEYS[key]
        try:
            if key == "eps_ladder":
                values[key] = tuple(float(x) for x in val.split(","))
            else:
                values[key] = caster(val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return values


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))
