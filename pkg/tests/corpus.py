"""Graphs shared by the test modules."""
import math
import random

from qgraph import Decoration, make_graph


def interval(length=1.0, left="dirichlet", right="dirichlet"):
    return make_graph({"a": left, "b": right}, [("e", "a", "b", length)])


def loop(length=1.0):
    return make_graph({"a": "kirchhoff"}, [("e", "a", "a", length)])


def cycle(lengths):
    n = len(lengths)
    verts = [f"c{i}" for i in range(n)]
    return make_graph(verts, [(f"s{i}", verts[i], verts[(i + 1) % n], l) for i, l in enumerate(lengths)])


def complete_graph(n=5, length=1.0):
    verts = [f"v{i}" for i in range(n)]
    return make_graph(verts, [(f"e{i}{j}", verts[i], verts[j], length) for i in range(n) for j in range(i + 1, n)])


def c4_decoration(l0=1.0):
    names = ["b1", "b2", "b3", "b4"]
    g = make_graph(names, [(f"e{i + 1}", names[i], names[(i + 1) % 4], l0) for i in range(4)])
    return Decoration(g, tuple(names))


def edge_decoration(length):
    return Decoration(make_graph(["p", "q"], [("e", "p", "q", length)]), ("p", "q"))


def square_lattice(length=1.0):
    return make_graph(["o"], [("x", "o", "o", length, (1, 0)), ("y", "o", "o", length, (0, 1))], period_rank=2)


def chain_lattice(length=1.0):
    return make_graph(["o"], [("x", "o", "o", length, (1,))], period_rank=1)


def random_graph(rng: random.Random, max_edges=6, lo=0.5, hi=2.0):
    """Connected graph with at most ``max_edges`` edges and at least one vertex of each kind."""
    nv = rng.randint(2, min(5, max_edges + 1))
    verts = [f"v{i}" for i in range(nv)]
    edges = [(f"e{i}", verts[rng.randrange(i)], verts[i], rng.uniform(lo, hi)) for i in range(1, nv)]
    target = rng.randint(len(edges), max_edges)
    while len(edges) < target:
        edges.append((f"e{len(edges) + 1}", rng.choice(verts), rng.choice(verts), rng.uniform(lo, hi)))
    conds = {v: rng.choice(["kirchhoff", "dirichlet"]) for v in verts}
    conds[verts[0]] = "dirichlet"
    conds[verts[-1]] = "kirchhoff"
    return make_graph(conds, edges)


def random_corpus(n=20, seed=2024):
    rng = random.Random(seed)
    return [random_graph(rng) for _ in range(n)]


def closed_form_edge_dtn(k, l):
    s, c = math.sin(k * l), math.cos(k * l)
    f = k / s
    return [[-c * f, f], [f, -c * f]]
