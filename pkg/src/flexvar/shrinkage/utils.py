"""
Inverse-Gamma (shape, scale) pairs of the auxiliary horseshoe conditionals.
Each function returns arrays so ``update_horseshoe`` can draw all elements
of a block in one call.
"""

import numpy as np


def local_scale_params(b2, e, d2_elem):
    """c_i^2 | . ~ IG(1, 1/e_i + b_i^2 / (2 d^2))."""
    scale = 1.0 / e + b2 / (2.0 * d2_elem)
    return np.ones_like(scale), scale


def global_scale_params(b2, c2, f, groups, n_groups: int):
    """d^2 | . ~ IG((K_g + 1)/2, 1/f + sum_g b_i^2 / (2 c_i^2))."""
    counts = np.bincount(groups, minlength=n_groups)
    ssq = np.bincount(groups, weights=b2 / c2, minlength=n_groups)
    return (counts + 1.0) / 2.0, 1.0 / f + ssq / 2.0


def local_aux_params(c2):
    """e_i | . ~ IG(1, 1 + 1/c_i^2)."""
    return np.ones_like(c2), 1.0 + 1.0 / c2


def global_aux_params(d2):
    """f | . ~ IG(1, 1 + 1/d^2)."""
    return np.ones_like(d2), 1.0 + 1.0 / d2
