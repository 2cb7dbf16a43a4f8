"""Forward and inverse elastic scattering by many small rigid obstacles.

Capacitances come from a boundary-element solver, far fields from the
Foldy-Lax system, centers from MUSIC and sizes from recovered capacitances.
"""
from .acquisition import (Dataset, DirectionSet, ResponseMatrix, add_noise, build_H,
                          direction_set, factorized_response, load_dataset, response_matrix,
                          save_dataset)
from .bem import (CapacitanceMatrix, acoustic_capacitance, elastic_capacitance,
                  sphere_elastic_capacitance)
from .foldy_lax import (CHANNELS, NINE_CHANNELS, FoldyLaxSolution, FoldyLaxSystem,
                        InvertibilityReport, Scatterer, Scene, assemble_system,
                        check_invertibility, far_field, scalar_far_field, solve)
from .green import far_kernel, kelvin, kupradze
from .medium import (SH, SV, ElasticMedium, P, S, WaveKind, incident_field, make_medium,
                     rotation_to_e3, shear_polarizations)
from .mesh import SurfaceMesh, make_shape, radii, read_off, write_off
from .music import (ImagingGrid, NoiseProjector, Pseudospectrum, locate, noise_projector,
                    pseudospectrum, test_vector)
from .sizing import (Constants, RecoveredScattering, SizeInterval, calibrate_constants,
                     convex_bounds, extract_capacitances, recover_B, size_interval)

__version__ = "0.1.0"
