"""Small complexes used throughout the tests and demos."""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .space import SimplicialComplex


def vertex() -> SimplicialComplex:
    return SimplicialComplex.from_facets([(0,)], n=0)


def segment() -> SimplicialComplex:
    return SimplicialComplex.from_facets([(0, 1)])


def path(k: int) -> SimplicialComplex:
    """Path with vertices 0..k."""
    return SimplicialComplex.from_facets([(i, i + 1) for i in range(k)])


def two_points() -> SimplicialComplex:
    return SimplicialComplex.from_facets([(0,), (1,)], n=0)


def hexagon() -> SimplicialComplex:
    """Circle triangulated as a hexagon."""
    return SimplicialComplex.from_facets([(i, (i + 1) % 6) for i in range(6)])


def hexagon_coords() -> dict:
    return {i: np.array([math.cos(i * math.pi / 3), math.sin(i * math.pi / 3)]) for i in range(6)}


def k5() -> SimplicialComplex:
    return SimplicialComplex.from_facets(combinations(range(5), 2))


def torus7() -> SimplicialComplex:
    """Seven-vertex torus: triangles {i, i+1, i+3} and {i, i+2, i+3} mod 7."""
    tris = []
    for i in range(7):
        tris.append((i, (i + 1) % 7, (i + 3) % 7))
        tris.append((i, (i + 2) % 7, (i + 3) % 7))
    return SimplicialComplex.from_facets(tris)


def rp2_6() -> SimplicialComplex:
    """Six-vertex real projective plane (hemi-icosahedron)."""
    tris = [
        (0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 5, 1),
        (1, 2, 4), (2, 3, 5), (3, 4, 1), (4, 5, 2), (5, 1, 3),
    ]
    return SimplicialComplex.from_facets(tris)


SHIPPED = {
    "vertex": vertex,
    "segment": segment,
    "hexagon": hexagon,
    "k5": k5,
    "torus7": torus7,
    "rp2": rp2_6,
}
