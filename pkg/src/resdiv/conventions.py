"""Fixed normalization constants shared across the package.

Everything that involves a choice of sign or a factor of 2*pi*i is pinned
here and documented in CONVENTIONS.md.  Reports embed CONVENTION_VERSION so
that archived numbers can be traced to the conventions that produced them.

Summary of the choices:

* Interior multiplication with the difference vector field acts on dzeta_j
  as  dzeta_j -> 2*pi*i*(zeta_j - w_j).
* Hefer coefficients therefore carry 1/(2*pi*i) so that contraction
  reproduces plain polynomial differences.
* Generator order: dzeta_1..n < dzetabar_1..n < e_1..m < e*_1..m
  < eps_1..r < det(Q*).  The top volume monomial is reported relative to
  the interleaved order dzeta_1^dzetabar_1^...^dzeta_n^dzetabar_n, whose
  Lebesgue density is (-2i)^n.
* Grothendieck residues are normalized so that the tuple (zeta_1..zeta_n)
  paired with 1 gives exactly 1; with the conventions above the resulting
  constant is 1/(-2*pi*i)^n.
"""

import numpy as np

CONVENTION_VERSION = "resdiv-conv-1"

TWO_PI_I = 2j * np.pi


def interleave_sign(n: int) -> int:
    """Sign relating dz_1..dz_n^dzbar_1..dzbar_n to the interleaved
    volume monomial dz_1^dzbar_1^...^dz_n^dzbar_n."""
    return -1 if (n * (n - 1) // 2) % 2 else 1


def lebesgue_factor(n: int) -> complex:
    """Lebesgue density of the interleaved volume monomial on C^n."""
    return (-2j) ** n


def residue_normalization(n: int) -> complex:
    """Multiplier turning the raw top-degree residue integral into the
    calibrated Grothendieck value (coordinate tuple + unit numerator -> 1)."""
    return 1.0 / (-TWO_PI_I) ** n
