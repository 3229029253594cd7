"""Quick end-to-end check of the Python bindings.

Build and install first, e.g. `pip install --no-build-isolation ./crates/python`
or `maturin develop -m crates/python/Cargo.toml`.
"""

import math

import meshshape as ms


def main():
    sq = ms.Mesh.square5()
    assert (sq.num_vertices, sq.num_triangles) == (5, 4)
    assert sq.is_admissible()
    assert abs(sum(sq.signed_areas()) - 4.0) < 1e-12

    disc = ms.Mesh.disc(3)
    assert disc.num_vertices == 1 + 3 * 3 * 4
    assert disc.theta() >= 1.0

    pen = ms.Penalty.preset("set1")
    # The Frobenius term vanishes at the reference configuration.
    assert ms.phi(disc, pen) >= 0.0
    g = ms.grad_phi(disc, pen)
    assert len(g) == 2 * disc.num_vertices

    # Central differences on the objective in one coordinate.
    dj = ms.shape_derivative(disc, "model")
    verts = disc.vertices()
    k, h = 5, 1e-6
    plus = [list(v) for v in verts]
    minus = [list(v) for v in verts]
    plus[k // 2][k % 2] += h
    minus[k // 2][k % 2] -= h
    fd = (ms.objective(disc.with_vertices([tuple(v) for v in plus]))
          - ms.objective(disc.with_vertices([tuple(v) for v in minus]))) / (2 * h)
    assert math.isclose(fd, dj[k], rel_tol=1e-5, abs_tol=1e-9), (fd, dj[k])

    run = ms.optimize(ms.Mesh.disc(4), variant="CompEuc", penalty=pen, max_iter=100)
    hist = run.history()
    assert hist[-1]["Total"] <= hist[0]["Total"]
    assert run.final_mesh.is_admissible()
    assert set(run.timings()) >= {"state", "retraction"}

    flipped = ms.Mesh([(0, 0), (1, 0), (0, 1)], [[0, 2, 1]])
    assert not flipped.is_admissible()
    try:
        ms.Mesh([(0, 0), (1, 0), (0, 1)], [[0, 1, 3]])
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range vertex index accepted")

    print(f"ok: {run!r}, theta {run.final_mesh.theta():.4f}, variants {ms.VARIANTS}")


if __name__ == "__main__":
    main()
