"""Local polynomial space on [0,1) in an orthonormal shifted-Legendre basis.

The space P_m of polynomials of degree <= m carries the basis
L_k(y) = sqrt(2k+1) P_k(2y-1), orthonormal for the L2 inner product on
[0,1).  The space is closed under the maps y -> (y+i)/b, and the
corresponding dilation matrices are precomputed per (base, degree), along
with a differentiation matrix.
"""

from __future__ import annotations

import numpy as np


def legendre_values(degree: int, y) -> np.ndarray:
    """Orthonormal shifted-Legendre values, shape (degree+1,) + y.shape."""
    y = np.asarray(y, dtype=float)
    t = 2.0 * y - 1.0
    out = np.empty((degree + 1,) + t.shape)
    out[0] = 1.0
    if degree >= 1:
        out[1] = t
    for k in range(1, degree):
        out[k + 1] = ((2 * k + 1) * t * out[k] - k * out[k - 1]) / (k + 1)
    scale = np.sqrt(2.0 * np.arange(degree + 1) + 1.0)
    return out * scale.reshape((-1,) + (1,) * t.ndim)


def _legendre_derivative_values(degree: int, y) -> np.ndarray:
    """Derivatives of the orthonormal shifted-Legendre basis at y."""
    y = np.asarray(y, dtype=float)
    t = 2.0 * y - 1.0
    p = np.empty((degree + 1,) + t.shape)
    dp = np.empty_like(p)
    p[0] = 1.0
    dp[0] = 0.0
    if degree >= 1:
        p[1] = t
        dp[1] = 1.0
    for k in range(1, degree):
        p[k + 1] = ((2 * k + 1) * t * p[k] - k * p[k - 1]) / (k + 1)
        dp[k + 1] = dp[k - 1] + (2 * k + 1) * p[k]
    scale = np.sqrt(2.0 * np.arange(degree + 1) + 1.0)
    # chain rule for t = 2y - 1
    return 2.0 * dp * scale.reshape((-1,) + (1,) * t.ndim)


class PolySpace:
    """P_m with an orthonormal basis, b-adic dilation and differentiation.

    Immutable after construction; all operations are pure.
    """

    def __init__(self, degree: int, base: int, quad_order: int = 32):
        if degree < 0:
            raise ValueError(f"degree must be >= 0, got {degree}")
        if base < 2:
            raise ValueError(f"base must be >= 2, got {base}")
        if quad_order <= degree:
            raise ValueError("quadrature order must exceed the degree")
        self.degree = degree
        self.base = base
        self.quad_order = quad_order
        nodes, weights = np.polynomial.legendre.leggauss(quad_order)
        self.nodes = 0.5 * (nodes + 1.0)
        self.weights = 0.5 * weights
        self.basis_at_nodes = legendre_values(degree, self.nodes)  # (m+1, Q)
        self._proj = self.basis_at_nodes * self.weights  # rows integrate vs L_j

        # D_i[j, k] = <L_k((. + i)/b), L_j>, so D_i c holds the coefficients
        # of y -> g((y + i)/b) when c holds those of g.
        dil = np.empty((base, degree + 1, degree + 1))
        for i in range(base):
            shifted = legendre_values(degree, (self.nodes + i) / base)
            dil[i] = self._proj @ shifted.T
        dil.setflags(write=False)
        self.dilation_matrices = dil

        dvals = _legendre_derivative_values(degree, self.nodes)
        diff = self._proj @ dvals.T
        diff.setflags(write=False)
        self.diff_matrix = diff

    @property
    def dim(self) -> int:
        return self.degree + 1

    def project(self, g) -> np.ndarray:
        """L2-orthogonal projection of a callable onto the space.

        Gauss-Legendre quadrature of order `quad_order`; exact for
        polynomial integrands of degree <= 2*quad_order - 1.
        """
        vals = np.asarray(g(self.nodes), dtype=float)
        if vals.shape != self.nodes.shape:
            vals = np.asarray([g(y) for y in self.nodes], dtype=float)
        bad = ~np.isfinite(vals)
        if bad.any():
            node = self.nodes[bad][0]
            raise ArithmeticError(f"non-finite value at quadrature node y={node}")
        return self._proj @ vals

    def eval(self, coeffs, y):
        """Evaluate sum_k c_k L_k at y in [0,1) (scalar or array)."""
        arr = np.asarray(y, dtype=float)
        if np.any(arr < 0.0) or np.any(arr >= 1.0):
            raise ValueError("evaluation point outside [0, 1)")
        vals = legendre_values(self.degree, arr)
        return np.tensordot(np.asarray(coeffs, dtype=float), vals, axes=(0, 0))

    def dilate(self, coeffs, digit: int) -> np.ndarray:
        """Coefficients of y -> g((y + digit)/base)."""
        if not 0 <= digit < self.base:
            raise ValueError(f"digit {digit} out of range for base {self.base}")
        return self.dilation_matrices[digit] @ np.asarray(coeffs, dtype=float)

    def differentiate(self, coeffs, order: int = 1) -> np.ndarray:
        """Coefficients of the order-th derivative (zero past the degree)."""
        if order < 0:
            raise ValueError(f"order must be >= 0, got {order}")
        c = np.asarray(coeffs, dtype=float)
        if order > self.degree:
            return np.zeros_like(c)
        for _ in range(order):
            c = self.diff_matrix @ c
        return c

    def gram_matrix(self) -> np.ndarray:
        """Quadrature Gram matrix of the basis (identity up to roundoff)."""
        return self._proj @ self.basis_at_nodes.T

    def monomial_coeffs(self) -> np.ndarray:
        """Columns express y^k in the orthonormal basis, k = 0..degree.

        Fixed change of basis back to monomial features.
        """
        cols = [self.project(lambda y, q=q: y**q) for q in range(self.dim)]
        return np.column_stack(cols)

    def max_abs(self, coeffs, tol: float = 1e-9) -> float:
        """Sup of |polynomial| on [0,1): endpoint and critical-point search."""
        c = np.asarray(coeffs, dtype=float)
        if self.degree == 0:
            return abs(c[0])
        scale = np.sqrt(2.0 * np.arange(self.degree + 1) + 1.0)
        poly = np.polynomial.legendre.Legendre(c * scale, domain=[0.0, 1.0])
        cand = [0.0, 1.0]
        roots = poly.deriv().roots()
        for r in roots:
            if abs(r.imag) < tol and -tol <= r.real <= 1.0 + tol:
                cand.append(min(max(r.real, 0.0), 1.0))
        return float(np.max(np.abs(poly(np.asarray(cand)))))
