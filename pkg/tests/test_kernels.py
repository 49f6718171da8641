import os
import subprocess
import sys

import numpy as np
import pytest

from oracles import A
from sealsim import kernels
from sealsim.mesh import AnnulusMesh

BACKENDS = kernels.available_backends()


def cells(seed=0):
    mesh = AnnulusMesh(A, 4, 16)
    mesh.refine_and_coarsen({c: 1 for c in range(0, 64, 3)})
    coords = mesh.cell_coords()
    rng = np.random.default_rng(seed)
    return coords, rng


def test_reference_rules():
    assert kernels.QUAD_W.sum() == pytest.approx(1.0)
    assert np.allclose(kernels.shape_values(kernels.QUAD_REF).sum(axis=1), 1.0)
    # 3-point Gauss is exact for degree 5
    assert np.dot(kernels.GAUSS_W, kernels.GAUSS_X**5) == pytest.approx(1 / 6)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_element_system_properties(name):
    impl = BACKENDS[name]
    coords, rng = cells()
    k = rng.uniform(0.5, 2.0, (len(coords), 9))
    ke, fe = impl.element_system(coords, k, np.ones((len(coords), 9)))
    assert np.allclose(ke, np.transpose(ke, (0, 2, 1)), atol=1e-14)
    assert np.allclose(ke.sum(axis=2), 0.0, atol=1e-13)  # constants in the kernel
    area = impl.cell_integrals(coords, np.ones((len(coords), 9)))
    assert np.allclose(fe.sum(axis=1), area)


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernels not built")
def test_backends_agree():
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    coords, rng = cells(1)
    n = len(coords)
    k, f = rng.uniform(0.1, 3, (n, 9)), rng.normal(size=(n, 9))
    ke1, fe1 = py.element_system(coords, k, f)
    ke2, fe2 = cy.element_system(coords, k, f)
    assert np.allclose(ke1, ke2, rtol=1e-12, atol=1e-13)
    assert np.allclose(fe1, fe2, rtol=1e-12, atol=1e-14)
    assert np.allclose(py.cell_integrals(coords, f), cy.cell_integrals(coords, f), atol=1e-15)
    nodal, ref = rng.normal(size=(n, 4)), rng.uniform(0, 1, (n, 2))
    assert np.allclose(py.gradients_at(coords, nodal, ref), cy.gradients_at(coords, nodal, ref), atol=1e-12)


def test_env_forces_python_fallback():
    env = dict(os.environ, SEALSIM_KERNELS="python")
    out = subprocess.run(
        [sys.executable, "-c", "from sealsim import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
