"""Exact arithmetic building blocks: prime fields, Reed-Solomon codes,
rational matrices, a certified PSD check, and an exact LP solver.

Everything here works over `fractions.Fraction`; no floats are used in any
verdict path. Failures carry machine-checkable witnesses.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

Rational = Fraction

__all__ = [
    "Rational",
    "NotPrime",
    "DimensionOutOfRange",
    "NonSymmetric",
    "SizeCapExceeded",
    "PrimeField",
    "LinearCode",
    "rs_code_generate",
    "RationalMatrix",
    "PsdResult",
    "psd_check_exact",
    "LpResult",
    "solve_lp_exact",
    "check_lp_certificate",
    "format_rational",
    "parse_rational",
]


class NotPrime(ValueError):
    """Raised when a field modulus is not a prime number."""


class DimensionOutOfRange(ValueError):
    """Raised when a code dimension D is outside 1..q-1."""


class NonSymmetric(ValueError):
    """Raised when a symmetric-matrix operation receives an asymmetric input."""


class SizeCapExceeded(ValueError):
    """Raised when an exact solver is asked to exceed its configured size cap."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


class PrimeField:
    """Arithmetic modulo a prime q. Elements are ints in 0..q-1."""

    def __init__(self, q: int):
        if not is_prime(q):
            raise NotPrime(f"{q} is not prime")
        self.q = q

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def neg(self, a: int) -> int:
        return (-a) % self.q

    def inv(self, a: int) -> int:
        if a % self.q == 0:
            raise ZeroDivisionError("0 has no inverse")
        return pow(a, self.q - 2, self.q)

    def elements(self) -> range:
        return range(self.q)

    def __repr__(self) -> str:
        return f"PrimeField({self.q})"


@dataclass(frozen=True)
class LinearCode:
    """A linear code given by its full codeword list.

    For the Reed-Solomon codes built here the list has q**D entries of
    length q-1 each (evaluations at the nonzero field points).
    """

    q: int
    length: int
    dimension: int
    codewords: tuple[tuple[int, ...], ...]

    def min_distance(self) -> int:
        # Linear code: min distance equals min weight of a nonzero codeword.
        best = self.length
        for w in self.codewords:
            if any(w):
                best = min(best, sum(1 for x in w if x != 0))
        return best

    def is_codeword(self, vec: Sequence[int]) -> bool:
        return tuple(vec) in set(self.codewords)

    def pairwise_min_distance(self) -> int:
        """Min Hamming distance over all codeword pairs, by brute force.

        Independent of min_distance(); used to cross-check it.
        """
        best = self.length
        for a, b in itertools.combinations(self.codewords, 2):
            d = sum(1 for x, y in zip(a, b) if x != y)
            best = min(best, d)
        return best


def rs_code_generate(q: int, D: int) -> LinearCode:
    """Reed-Solomon code of dimension D over F_q, evaluated at the q-1
    nonzero points in increasing order. Distance is q-D by construction.

    Codeword index i (0-based) encodes the coefficient vector of a degree
    < D polynomial: digits of i in base q, little-endian, so coefficient
    c_t multiplies x**t.
    """
    fld = PrimeField(q)  # raises NotPrime
    if not (1 <= D <= q - 1):
        raise DimensionOutOfRange(f"need 1 <= D <= q-1, got D={D}, q={q}")
    points = list(range(1, q))
    words = []
    for i in range(q**D):
        coeffs = []
        v = i
        for _ in range(D):
            coeffs.append(v % q)
            v //= q
        word = tuple(
            sum(c * pow(x, t, q) for t, c in enumerate(coeffs)) % q for x in points
        )
        words.append(word)
    return LinearCode(q=q, length=q - 1, dimension=D, codewords=tuple(words))


def format_rational(x: Rational) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(s: str) -> Rational:
    s = s.strip()
    if "/" in s:
        num, den = s.split("/")
        return Fraction(int(num), int(den))
    return Fraction(int(s))


class RationalMatrix:
    """Symmetric matrix over Fraction with labelled rows/columns.

    Construction validates symmetry exactly and raises NonSymmetric with
    the offending index pair otherwise.
    """

    def __init__(self, labels: Sequence, rows: Sequence[Sequence[Rational]]):
        labels = tuple(labels)
        rows = tuple(tuple(Fraction(x) for x in row) for row in rows)
        n = len(labels)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError("shape does not match label count")
        for i in range(n):
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise NonSymmetric(f"entry mismatch at ({labels[i]!r}, {labels[j]!r})")
        self.labels = labels
        self.rows = rows

    @classmethod
    def from_function(cls, labels: Sequence, fn: Callable) -> "RationalMatrix":
        labels = tuple(labels)
        rows = [[Fraction(fn(a, b)) for b in labels] for a in labels]
        return cls(labels, rows)

    @property
    def order(self) -> int:
        return len(self.labels)

    def entry(self, i: int, j: int) -> Rational:
        return self.rows[i][j]

    def add(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.labels != other.labels:
            raise ValueError("label mismatch")
        return RationalMatrix(
            self.labels,
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)],
        )

    def scale(self, c: Rational) -> "RationalMatrix":
        c = Fraction(c)
        return RationalMatrix(self.labels, [[c * x for x in r] for r in self.rows])

    def quadratic_form(self, v: Sequence[Rational]) -> Rational:
        v = [Fraction(x) for x in v]
        total = Fraction(0)
        for i, row in enumerate(self.rows):
            if v[i] == 0:
                continue
            total += v[i] * sum(row[j] * v[j] for j in range(len(v)) if v[j] != 0)
        return total

    def __repr__(self) -> str:
        return f"RationalMatrix(order={self.order})"


@dataclass(frozen=True)
class PsdResult:
    is_psd: bool
    witness: tuple[Rational, ...] | None = None
    witness_value: Rational | None = None
    rank: int | None = None

    def __bool__(self) -> bool:
        return self.is_psd


def psd_check_exact(matrix) -> PsdResult:
    """Decide positive semidefiniteness exactly.

    Accepts a RationalMatrix or a square symmetric list-of-lists of
    rationals. Uses fraction-free symmetric elimination; on rejection the
    result carries a vector v with v^T M v < 0, and that witness value is
    re-verified by direct multiplication before returning.
    """
    if isinstance(matrix, RationalMatrix):
        mat = [list(r) for r in matrix.rows]
        as_matrix = matrix
    else:
        rows = [list(map(Fraction, r)) for r in matrix]
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise NonSymmetric("matrix is not square")
        for i in range(n):
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise NonSymmetric(f"entry mismatch at ({i}, {j})")
        mat = rows
        as_matrix = None

    n = len(mat)
    # T tracks row operations: current = T @ original @ T^T at all times.
    T = [[Fraction(1) if i == j else Fraction(0) for j in range(n)] for i in range(n)]
    A = [row[:] for row in mat]

    def certify(v: list[Fraction]) -> PsdResult:
        if as_matrix is not None:
            val = as_matrix.quadratic_form(v)
        else:
            val = Fraction(0)
            for i in range(n):
                if v[i] == 0:
                    continue
                val += v[i] * sum(mat[i][j] * v[j] for j in range(n) if v[j] != 0)
        assert val < 0, "witness failed re-verification"
        return PsdResult(is_psd=False, witness=tuple(v), witness_value=val)

    rank = 0
    done = [False] * n
    for _ in range(n):
        # Pick a remaining index with nonzero diagonal, else handle zeros.
        pivot = None
        for i in range(n):
            if not done[i] and A[i][i] != 0:
                pivot = i
                break
        if pivot is None:
            # All remaining diagonals are zero. PSD then forces the whole
            # remaining block to vanish; any nonzero off-diagonal entry
            # yields a negative direction.
            for i in range(n):
                if done[i]:
                    continue
                for j in range(n):
                    if done[j] or j == i:
                        continue
                    if A[i][j] != 0:
                        c = A[i][j]
                        # With zero diagonals the form on span(e_i, e_j) is
                        # 2 c s t; pick signs so it is negative.
                        s = Fraction(1)
                        t = Fraction(-1) if c > 0 else Fraction(1)
                        v = [s * T[i][k] + t * T[j][k] for k in range(n)]
                        return certify(v)
            break
        d = A[pivot][pivot]
        if d < 0:
            return certify(list(T[pivot]))
        # Eliminate row/column `pivot` from every other remaining index.
        # The pivot row must stay intact until every other row has used it.
        for i in range(n):
            if done[i] or i == pivot or A[i][pivot] == 0:
                continue
            f = A[i][pivot] / d
            for k in range(n):
                if not done[k]:
                    A[i][k] -= f * A[pivot][k]
            for k in range(n):
                T[i][k] -= f * T[pivot][k]
        for k in range(n):
            if k != pivot:
                A[pivot][k] = Fraction(0)
                A[k][pivot] = Fraction(0)
        done[pivot] = True
        rank += 1

    # Remaining block had all-zero diagonal and all-zero off-diagonals.
    return PsdResult(is_psd=True, rank=rank)


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: tuple[Rational, ...] | None = None
    value: Rational | None = None
    basis: tuple[int, ...] | None = None


_LP_CAP = 500


def solve_lp_exact(
    A: Sequence[Sequence[Rational]],
    b: Sequence[Rational],
    c: Sequence[Rational],
    sense: str = "min",
    cap: int = _LP_CAP,
) -> LpResult:
    """Solve min (or max) c.x subject to A x >= b, x >= 0, exactly.

    Two-phase simplex with Bland's rule over Fraction. Raises
    SizeCapExceeded when rows or columns exceed `cap` (default 500).
    The basis in the result lets the answer be re-verified by
    substitution; see check_lp_certificate.
    """
    A = [list(map(Fraction, row)) for row in A]
    b = [Fraction(x) for x in b]
    c = [Fraction(x) for x in c]
    m, n = len(A), len(c)
    if any(len(row) != n for row in A) or len(b) != m:
        raise ValueError("inconsistent LP dimensions")
    if m > cap or n > cap:
        raise SizeCapExceeded(f"LP size {m}x{n} exceeds cap {cap}")
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    obj = c[:] if sense == "min" else [-x for x in c]

    # Standard form: A x - s = b with x, s >= 0. Flip rows to make b >= 0,
    # then add artificials where needed.
    ncols = n + m  # structural + surplus
    rows = []
    rhs = []
    for i in range(m):
        row = A[i] + [Fraction(0)] * m
        row[n + i] = Fraction(-1)
        if b[i] < 0:
            row = [-x for x in row]
            rhs.append(-b[i])
        else:
            rhs.append(b[i])
        rows.append(row)

    # Artificial variable per row; phase 1 minimizes their sum.
    art = list(range(ncols, ncols + m))
    for i in range(m):
        for j in range(m):
            rows[i].append(Fraction(1) if i == j else Fraction(0))
    total = ncols + m
    basis = art[:]

    # Tableau: rows (m x total) plus rhs column. Basis columns are kept
    # reduced to identity throughout.
    def pivot(r: int, col: int) -> None:
        p = rows[r][col]
        rows[r] = [x / p for x in rows[r]]
        rhs[r] = rhs[r] / p
        for i in range(m):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
                rhs[i] -= f * rhs[r]
        basis[r] = col

    def run_simplex(cost: list[Fraction], allowed: int) -> str:
        # Returns "optimal" or "unbounded"; Bland's rule prevents cycling.
        # Only columns < allowed may enter (phase 2 locks out artificials).
        while True:
            # Reduced costs relative to the current basis.
            y = [cost[basis[i]] for i in range(m)]
            entering = None
            for j in range(allowed):
                if j in basis:
                    continue
                red = cost[j] - sum(y[i] * rows[i][j] for i in range(m))
                if red < 0:
                    entering = j
                    break
            if entering is None:
                return "optimal"
            leaving = None
            best = None
            for i in range(m):
                if rows[i][entering] > 0:
                    ratio = rhs[i] / rows[i][entering]
                    if best is None or ratio < best or (
                        ratio == best and basis[i] < basis[leaving]
                    ):
                        best = ratio
                        leaving = i
            if leaving is None:
                return "unbounded"
            pivot(leaving, entering)

    phase1_cost = [Fraction(0)] * ncols + [Fraction(1)] * m
    run_simplex(phase1_cost, total)
    art_value = sum(rhs[i] for i in range(m) if basis[i] >= ncols)
    if art_value > 0:
        return LpResult(status="infeasible")
    # Drive any artificial still in the basis out (degenerate rows).
    for i in range(m):
        if basis[i] >= ncols:
            swapped = False
            for j in range(ncols):
                if j not in basis and rows[i][j] != 0:
                    pivot(i, j)
                    swapped = True
                    break
            if not swapped:
                # Redundant zero row; harmless, leave the artificial at 0.
                pass

    phase2_cost = obj + [Fraction(0)] * (total - n)
    status = run_simplex(phase2_cost, ncols)
    if status == "unbounded":
        return LpResult(status="unbounded")
    x = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = rhs[i]
    value = sum(ci * xi for ci, xi in zip(c, x))
    return LpResult(status="optimal", x=tuple(x), value=value, basis=tuple(sorted(basis)))


def check_lp_certificate(
    A: Sequence[Sequence[Rational]],
    b: Sequence[Rational],
    c: Sequence[Rational],
    result: LpResult,
) -> bool:
    """Re-verify an optimal LpResult by substitution: feasibility of x and
    agreement of the reported value. Returns False on any mismatch."""
    if result.status != "optimal" or result.x is None:
        return False
    x = [Fraction(v) for v in result.x]
    if any(v < 0 for v in x):
        return False
    for row, bi in zip(A, b):
        if sum(Fraction(a) * v for a, v in zip(row, x)) < Fraction(bi):
            return False
    value = sum(Fraction(ci) * v for ci, v in zip(c, x))
    return value == result.value
