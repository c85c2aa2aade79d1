"""Exact 2-adic verification toolkit for Heegner point congruences.

Subpackages build on each other: arith (integer utilities), exactnum
(rationals, p-adics, quadratic fields, series, bounded-error complex),
ellcurve (Weierstrass models, reduction, point counting), twotors
(mod-2 Galois image and twist enumeration), qexp (eigenform coefficients
and stabilizations), heegner (complex-analytic Heegner point computation),
starcong (formal logarithms and the main congruence), harness (dataset,
tables, CLI).
"""

__version__ = "0.1.0"

from .exactnum import (  # noqa: F401
    BigComplex,
    NotSplit,
    PadicNumber,
    PowerSeries,
    PrecisionError,
    QuadElem,
    Rational,
    padic_from_rational,
    quad_embeddings,
    series_integrate_formal,
)
from .ellcurve import (  # noqa: F401
    CurvePoint,
    WeierstrassCurve,
    nonsingular_count,
    quadratic_twist,
    scalar_mul,
    tate_algorithm,
)
from .harness import (  # noqa: F401
    CurveRecord,
    GoldfeldCount,
    MissingCurve,
    ParseError,
    ResultsCache,
    TableReport,
    ValidationError,
    goldfeld_count,
    golden_table,
    load_dataset,
    reproduce_table,
)
from .heegner import (  # noqa: F401
    HeegnerPointResult,
    HeegnerTau,
    PrecisionUnreachable,
    RecognitionFailed,
    elliptic_exp,
    eval_modular_param,
    heegner_point,
    heegner_tau_list,
    period_lattice,
)
from .starcong import (  # noqa: F401
    BSDPreconditionReport,
    CongruenceReport,
    FormalLogSeries,
    InsufficientPrecision,
    MultiplierOverflow,
    PrecisionLoss,
    StarReport,
    UnsupportedPair,
    bsd_preconditions,
    euler_factor,
    formal_log_series,
    log_omega,
    star_check,
    verify_main_congruence,
)
from .twotors import (  # noqa: F401
    DensityReport,
    TwistSet,
    enumerate_twists,
    heegner_hypothesis,
    rank_side,
    twist_prime_density,
    two_splits,
)
