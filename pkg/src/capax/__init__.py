"""Conformal capacities and path moduli of linked-curve condensers.

Subpackages cover geometry on S^3 and R^3 (Hopf link, Clifford torus,
Mobius maps), polygonal-curve topology (linking numbers, winding lifts),
closed-form reference values, discrete p-modulus on graphs with the
path/cut duality product, a voxel p-energy minimizer for capacities,
reflection/dihedral symmetrization, and a CLI driving seeded experiments.
"""

from capax.geometry import (
    Polyline,
    MobiusMap,
    CliffordFrame,
    hopf_to_point,
    point_to_hopf,
    stereographic,
    inverse_stereographic,
    clifford_swap,
    apply_mobius,
    sample_hopf_link,
    curve_length,
)
from capax.reference import (
    gamma_fn,
    beta_fn,
    hopf_capacity_exact,
    hopf_profile,
    ring_capacity_exact,
)
from capax.topology import (
    Axis,
    hausdorff_distance,
    is_linked,
    linking_number,
    separated_by_frame,
    winding_lift,
)
from capax.graphmod import (
    WeightedGraph,
    ModulusSolution,
    build_grid_graph,
    connecting_modulus,
    cut_modulus,
    duality_product,
    union_connecting_modulus,
)
from capax.pde import (
    CapacityResult,
    ScalarField,
    SolveSettings,
    VoxelGrid,
    capacity,
    density_from_potential,
    level_set_flux,
    potential_from_density,
    rasterize_condenser,
    rasterize_mixed,
    rasterize_regions,
    solve_capacity,
)
from capax.symmetrize import (
    DihedralFrame,
    HalfspaceFrame,
    axisymmetric_surrogate,
    dihedral_symmetrize,
    even_reflect_density,
    linked_component,
    reflect_half,
)
from capax.experiments import ExperimentConfig, Report, run_command

__all__ = [
    "Polyline",
    "MobiusMap",
    "CliffordFrame",
    "hopf_to_point",
    "point_to_hopf",
    "stereographic",
    "inverse_stereographic",
    "clifford_swap",
    "apply_mobius",
    "sample_hopf_link",
    "curve_length",
    "gamma_fn",
    "beta_fn",
    "hopf_capacity_exact",
    "hopf_profile",
    "ring_capacity_exact",
    "Axis",
    "hausdorff_distance",
    "is_linked",
    "linking_number",
    "separated_by_frame",
    "winding_lift",
    "WeightedGraph",
    "ModulusSolution",
    "build_grid_graph",
    "connecting_modulus",
    "cut_modulus",
    "duality_product",
    "union_connecting_modulus",
    "CapacityResult",
    "ScalarField",
    "SolveSettings",
    "VoxelGrid",
    "capacity",
    "density_from_potential",
    "level_set_flux",
    "potential_from_density",
    "rasterize_condenser",
    "rasterize_mixed",
    "rasterize_regions",
    "solve_capacity",
    "DihedralFrame",
    "HalfspaceFrame",
    "axisymmetric_surrogate",
    "dihedral_symmetrize",
    "even_reflect_density",
    "linked_component",
    "reflect_half",
    "ExperimentConfig",
    "Report",
    "run_command",
]

__version__ = "0.1.0"
