"""Quaternionic projective geometry toolkit: the k-Cauchy-Fueter complex, its
projective invariance, quaternionic positivity and Monge-Ampere, and defining
densities."""
from .cf import (D_j, OperatorReport, Section, baston, d_prime, fantappie, is_k_regular,
                 kernel_function, operator_identity_suite, pi_j, verify_invariance)
from .errors import (ConfigError, FueterKitError, LpFailure, NotInImage, PreconditionFailed,
                     RankDeficient, ShapeMismatch, SignIndefinite, SingularLocus, SizeMismatch)
from .fefferman import (DefiningFunction, DensityExpansion, boundary_normalize, fefferman_iterate,
                        j_equals_m_over_u, j_functional, order_check)
from .fields import ClosureField, Jet, PolyField, nabla
from .group import GroupElement, act_point, cocycles, verify_cocycle
from .positivity import (ConeCertificate, ElementaryGenerator, TwoPForm, cln_check, elementary_sp,
                         integrate_top_form, is_positive_dual, ma, ma_transform_check,
                         positivity_transport, sp_membership, volume_jacobian_check)
from .quat import QuatMatrix, Quaternion, tau, tau_inverse
from .superalg import SuperElement, act_group

__version__ = "0.1.0"
