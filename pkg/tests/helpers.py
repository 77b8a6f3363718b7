"""Shared fixtures: small functors, strict reps, and a tensor-power model of symmetric powers."""
import itertools
import math
from fractions import Fraction

from ruth.cochains import zeros
from ruth.constructions import acyclic_rep, conjugated_trivial, random_gauge, random_invertible
from ruth.exactla import RationalMatrix, rank
from ruth.groupoid import GroupoidMorphism, cyclic_group
from ruth.operations import direct_sum, gauge_transform, shift
from ruth.rep import trivial_rep


def rm(A):
    return RationalMatrix.from_dense(A.tolist(), A.shape[1])


def reduction_mod(n, m):
    """Z/n -> Z/m for m | n."""
    H, G = cyclic_group(n), cyclic_group(m)
    return GroupoidMorphism.from_ids(H, G, {"*": "*"}, {"g%d" % i: "g%d" % (i % m) for i in range(n)})


def multiplication_by(n, u):
    G = cyclic_group(n)
    return GroupoidMorphism.from_ids(G, G, {"*": "*"}, {"g%d" % i: "g%d" % (i * u % n) for i in range(n)})


def strict_rep(rng, G, width=1):
    """A strict representation with a nonzero differential."""
    E = acyclic_rep(trivial_rep(G)) if width else trivial_rep(G)
    E, _, _ = direct_sum(E, shift(conjugated_trivial(G, {x: random_invertible(rng, 1) for x in range(G.n_objects)}), -1))
    return gauge_transform(E, random_gauge(rng, E, higher=False))[0]


def _koszul_sign(idx, perm, degs):
    """Sign of moving factor perm[j] to slot j."""
    sign = 1
    for a in range(len(perm)):
        for b in range(a + 1, len(perm)):
            if perm[a] > perm[b] and degs[idx[perm[a]]] % 2 and degs[idx[perm[b]]] % 2:
                sign = -sign
    return sign


class TensorPower:
    def __init__(self, degs, q):
        self.degs, self.q = degs, q
        self.basis = list(itertools.product(range(len(degs)), repeat=q))
        self.pos = {t: i for i, t in enumerate(self.basis)}
        self.deg = [sum(degs[i] for i in t) for t in self.basis]
        N = len(self.basis)
        P = zeros(N, N)
        for j, t in enumerate(self.basis):
            for perm in itertools.permutations(range(q)):
                P[self.pos[tuple(t[p] for p in perm)], j] += Fraction(_koszul_sign(t, perm, degs), math.factorial(q))
        self.P = P

    def power(self, A):
        N = len(self.basis)
        out = zeros(N, N)
        for j, t in enumerate(self.basis):
            for i, u in enumerate(self.basis):
                out[i, j] = math.prod(A[u[a], t[a]] for a in range(self.q)) if self.q else 1
        return out

    def derivation(self, d):
        N = len(self.basis)
        out = zeros(N, N)
        for j, t in enumerate(self.basis):
            before = 0
            for a in range(self.q):
                for r in range(d.shape[0]):
                    if d[r, t[a]]:
                        u = t[:a] + (r,) + t[a + 1:]
                        out[self.pos[u], j] += (-1 if before % 2 else 1) * d[r, t[a]]
                before += self.degs[t[a]]
        return out

    def cols(self, l):
        return [j for j, v in enumerate(self.deg) if v == l]

    def invariant_dim(self, l):
        return rank(rm(self.P[:, self.cols(l)])) if self.cols(l) else 0

    def invariant_cohomology(self, d, l):
        D = self.derivation(d)
        rk = lambda m: rank(rm(D @ self.P[:, self.cols(m)])) if self.cols(m) else 0
        return self.invariant_dim(l) - rk(l) - rk(l - 1)

    def invariant_trace(self, A, l):
        M = self.power(A) @ self.P
        return sum(M[j, j] for j in self.cols(l))


def _fiber_cohomology(E, x, l):
    B = E.bundle
    d = E.r(0, (x,))
    def rk(m):
        if not B.dim(x, m) or not B.dim(x, m + 1):
            return 0
        return rank(rm(d[B.block(x, m + 1), B.block(x, m)]))
    return B.dim(x, l) - rk(l) - rk(l - 1)
