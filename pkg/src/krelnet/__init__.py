"""K-terminal network unreliability: exact counting reduction and PAC estimators."""

from .encoder import (ProjectedCnf, count_to_unreliability, emit_dimacs, encode,
                      exact_projected_count, parse_dimacs)
from .errors import (ContractViolation, CounterError, DegenerateMeanError, InstanceParseError,
                     InvalidArgument, NumericError, ReliabilityError, ResourceLimitError)
from .estimators import (Entropy, Estimate, PacParams, SampleStream, aa, choose_k, cmc_sample,
                         cmc_stream, gbas, median_of_means, sra)
from .graph_model import (DyadicProb, Edge, NetworkInstance, TerminalPattern, evaluate_structure,
                          load_instance, make_grid, parse_instance, realization_probability,
                          serialize_instance)
from .metrics import efficiency_ratio, observed_confidence, observed_error, wnrv
from .oracle import exact_unreliability
from .transform import build_gadget, dyadic_expansion, unweight

__version__ = "0.1.0"
