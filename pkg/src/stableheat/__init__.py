"""Heat kernels of time-inhomogeneous stable-like operators: densities, simulation and validation."""

from .compare import compare_empirical, compare_fields
from .estimators import HeatKernelDensity, KernelValidator
from .fields import DensityField, SpaceTimeWindow
from .fourier import density_grid, density_point, spectral_derivative
from .jumps import EmpiricalDensity, JumpSampler, simulate_density, simulate_euler_density
from .kernels import ConfigError, KernelSpec, registry_examples, rho, validate_kernel
from .parametrix import Parametrix, assemble_density, assemble_fractional_derivative
from .perturbation import DriftField, duhamel_solve, kato_modulus
from .subordination import TestFunction, half_generator, riesz_sweep, subordinate_levy_density
from .validation import Check, ValidationReport, run_validation

__all__ = [
    "Check", "ConfigError", "DensityField", "DriftField", "EmpiricalDensity", "HeatKernelDensity",
    "JumpSampler", "KernelSpec", "KernelValidator", "Parametrix", "SpaceTimeWindow", "TestFunction",
    "ValidationReport", "assemble_density", "assemble_fractional_derivative", "compare_empirical",
    "compare_fields", "density_grid", "density_point", "duhamel_solve", "half_generator", "kato_modulus",
    "registry_examples", "rho", "riesz_sweep", "run_validation", "simulate_density", "simulate_euler_density",
    "spectral_derivative", "subordinate_levy_density", "validate_kernel",
]
__version__ = "0.1.0"
