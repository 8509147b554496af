"""EEFX allocations, certificates and exhaustive fairness verification for indivisible items."""
from .alloc import Allocation, Certificate, allocation_vector, from_vector, pick_by_list, rounds_of
from .core import (
    AdditiveValuation,
    Instance,
    OrderingPermutation,
    TableValuation,
    Valuation,
    cancelability_witness,
    correlation,
    dominates,
    is_cancelable,
    is_ordered,
    is_strongly_monotone,
    max_correlation,
    one_less,
    ordered_valuation,
)
from .eefx import SolveResult, bar_kri, eefx_certificate_chores, eefx_certificate_goods, verify_certificate
from .errors import BudgetExceeded, FairDivError, PreconditionError, ValidationError, VerificationError
from .fairness import (
    fairness_report,
    is_alpha_efx,
    is_alpha_mms,
    is_ef1,
    is_ef1_satisfied,
    is_efx,
    is_efx_satisfied,
    is_prop1,
    is_propm,
    is_propx,
    mms_to_eefx_certificate,
    mms_value,
)
from .oracle import (
    SearchBudget,
    enumerate_allocations,
    find_efx_allocation,
    is_eef1_bruteforce,
    is_eef1_satisfied_bruteforce,
    is_eefx_bruteforce,
    is_eefx_satisfied_bruteforce,
)
from .ordered_efx import efx_ordered_chores, efx_ordered_goods

__version__ = "0.1.0"
