from qflag.qsystem.dressing import Dressing, fusion_factor, hirota_factors, t_monomial
from qflag.qsystem.evaluator import Evaluator, identity_relation, qq_sides
from qflag.qsystem.orbit import (
    NodeOrbit,
    OrbitRelation,
    character_seeds,
    node_orbits,
    path_difference,
    twist_weights,
    walk_relations,
    weyl_orbit_extend,
)
from qflag.qsystem.projection import highest_weight_vectors, irrep_project, isotypic_projector
from qflag.qsystem.relations import (
    SUITES,
    check_fusion_D,
    check_global_covariance,
    check_projection_relations,
    check_qq_general,
    check_quantisation,
    spinor_pairing,
    spinor_quantisation_sign,
    tensor_pairing_A,
    tensor_pairing_D,
    verify_system,
)
from qflag.qsystem.system import (
    ExtendedQSystem,
    QVector,
    assemble_extended_A,
    assemble_extended_D,
    assemble_from_orbits,
    extend_system,
    hodge_dual_A,
    inverse_so6_dictionary,
    normalize_system,
    params_from_model,
    q_function,
    relation_constants,
    so6_dictionary,
    system_from_model,
)

__all__ = [
    "Dressing",
    "Evaluator",
    "ExtendedQSystem",
    "NodeOrbit",
    "OrbitRelation",
    "QVector",
    "SUITES",
    "assemble_extended_A",
    "assemble_extended_D",
    "assemble_from_orbits",
    "character_seeds",
    "check_fusion_D",
    "check_global_covariance",
    "check_projection_relations",
    "check_qq_general",
    "check_quantisation",
    "extend_system",
    "fusion_factor",
    "highest_weight_vectors",
    "hirota_factors",
    "hodge_dual_A",
    "identity_relation",
    "inverse_so6_dictionary",
    "irrep_project",
    "isotypic_projector",
    "node_orbits",
    "normalize_system",
    "params_from_model",
    "path_difference",
    "q_function",
    "qq_sides",
    "relation_constants",
    "so6_dictionary",
    "spinor_pairing",
    "spinor_quantisation_sign",
    "system_from_model",
    "t_monomial",
    "tensor_pairing_A",
    "tensor_pairing_D",
    "verify_system",
    "twist_weights",
    "walk_relations",
    "weyl_orbit_extend",
]
