"""torusband: spectral bands and eigenvalue ladders for weakly damped
wave operators on the 2-torus.

The library covers the full pipeline: band-limited random symbols
(symbols), their averages along the geodesic flow (classical), the dense
operator on Fourier mode shells and its spectrum (shell, eig), truncated
1-d models with resolvent probes (model1d), and the edge eigenvalue
lattice asymptotics with prediction/extraction/matching (ladder).  The
cli module exposes the report pipeline that writes delimited tables and
figures.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, ConvergenceFailure, DegenerateMinimum,
                     DimensionCapExceeded, EmptyShell,
                     RegionViolatesHypotheses, TorusbandError,
                     TruncationTooSmall)
from .symbols import (PhasePoint, SymbolCoefficients, evaluate_symbol,
                      generate_random_symbol, read_symbol, write_symbol)
from .classical import (QInfinityInterval, RationalDirection, band_bounds,
                        cohomological_solve, finite_time_average,
                        q_infinity_interval, rational_directions,
                        secular_average)
from .shell import (ModeShell, ShellMatrix, SpectrumRecord, assemble_matrix,
                    build_mode_shell, compute_spectrum, read_spectrum,
                    write_spectrum)
from .model1d import (Model1D, ResolventProbe, ZRegion, assemble_1d,
                      low_lying_spectrum, resolvent_bound_scan,
                      smallest_singular_value, suggest_j_max)
from .ladder import (LatticePrediction, MatchReport, extract_leg,
                     harmonic_ladder, match_spectra, predict_lattice)
