import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kleinx.errors import DomainError
from kleinx.extremal import K_HALF, PERIOD, lambda_area
from kleinx.geometry import (G0_CHART, GHAT0_CHART, K_CN, Z_HALF_TURN, area_g0, bipolar_metric,
                             bipolar_table, harmonicity_defect, lawson_immersion, lawson_mesh,
                             metric_g0, pullback_ghat0, verify_g0_scaling, wp_cn_identities,
                             write_lawson_obj, y_of_v, z_of_v)
from kleinx.specfun import complete_K, jacobi_cn_sn_dn

angles = st.floats(-10.0, 10.0)


def test_g0_examples():
    assert metric_g0(0.3, math.pi / 2) == pytest.approx((10.0, 10.0), abs=1e-13)
    assert metric_g0(0.3, 0.0) == pytest.approx((10.0, 10.0 / 9.0), abs=1e-14)


def test_g0_is_bipolar_3_1():
    rng = np.random.default_rng(0)
    u, v = rng.uniform(-5, 5, (2, 100))
    E0, G0 = metric_g0(u, v)
    E, G = bipolar_metric(3, 1, u, v)
    assert np.array_equal(E0, E) and np.array_equal(G0, G)


def test_bipolar_examples():
    v = np.linspace(0, math.pi, 50)
    E, G = bipolar_metric(1, 1, 0.0, v)
    assert np.allclose(E, 2.0) and np.allclose(G, 2.0)
    E, G = bipolar_metric(5, 2, *np.meshgrid(v, v))
    assert E.min() > 0 and G.min() > 0
    with pytest.raises(DomainError):
        bipolar_metric(1, 2, 0.0, 0.0)


@given(angles)
def test_v_factor_even_and_pi_periodic(v):
    assert metric_g0(0.0, v) == pytest.approx(metric_g0(0.0, -v), rel=1e-13)
    assert metric_g0(0.0, v + math.pi) == pytest.approx(metric_g0(0.0, v), rel=1e-12)


def test_lawson_immersion():
    assert lawson_immersion(3, 1, 0.0, 0.0) == pytest.approx([1, 0, 0, 0])
    rng = np.random.default_rng(1)
    u, v = rng.uniform(-7, 7, (2, 1000))
    assert np.abs(np.linalg.norm(lawson_immersion(3, 1, u, v), axis=-1) - 1).max() < 1e-15
    assert np.all(np.isfinite(harmonicity_defect(3, 1, u[:10], v[:10])))
    with pytest.raises(DomainError):
        lawson_immersion(1, 3, 0.0, 0.0)


def test_z_of_v_anchors():
    assert z_of_v(0.0) == 0.0
    assert 3 * z_of_v(math.pi / 2) == pytest.approx(complete_K(K_CN), abs=1e-12)
    assert z_of_v(math.pi) == pytest.approx(Z_HALF_TURN, abs=1e-12)


def test_cos_is_cn_of_z():
    rng = np.random.default_rng(2)
    v = rng.uniform(-8, 8, 100)
    cn = jacobi_cn_sn_dn(3 * z_of_v(v), K_CN)[0]
    assert np.abs(np.cos(v) - cn).max() < 1e-10


def test_period_bridge():
    assert abs(2 * K_HALF - 4 / 3 * complete_K(K_CN)) < 1e-12
    # half a turn in v is half a period in y
    assert abs(2 * Z_HALF_TURN - PERIOD) < 1e-12


def test_pullback_is_twice_g0():
    rep = verify_g0_scaling(64)
    assert rep.passed and rep.max_rel_error < 1e-8
    # the literal x = u map is off by the factor 4 in the x-coefficient
    assert rep.max_rel_error_x_equals_u > 0.5
    with pytest.raises(DomainError):
        verify_g0_scaling(16)


def test_y_of_v_in_fundamental_period():
    y = y_of_v(np.linspace(-20, 20, 101))
    assert y.min() >= 0 and y.max() < PERIOD


def test_wp_cn_identities():
    z = np.linspace(0.013, 2.5, 100)
    r1, r2 = wp_cn_identities(z)
    assert np.abs(r1).max() < 1e-9 and np.abs(r2).max() < 1e-9


def test_area_times_two_is_lambda_area():
    assert abs(2 * area_g0() - lambda_area()) < 1e-8


def test_area_scales_linearly():
    x, w = np.polynomial.legendre.leggauss(64)
    u = 0.25 * math.pi * (x + 1)
    v = 0.5 * math.pi * (x + 1)
    U, V = np.meshgrid(u, v, indexing="ij")
    E, G = metric_g0(U, V)
    a1 = (w[:, None] * w[None, :] * np.sqrt(E * G)).sum()
    a3 = (w[:, None] * w[None, :] * np.sqrt(3 * E * 3 * G)).sum()
    assert a3 == pytest.approx(3 * a1, rel=1e-14)


def test_charts():
    assert G0_CHART.factor(0.2, 0.0) == pytest.approx(10.0)
    assert GHAT0_CHART.factor(0.1, 0.0) == pytest.approx(3.0)
    y = np.linspace(-PERIOD / 2, PERIOD / 2, 50)
    assert np.allclose(GHAT0_CHART.factor(0.0, y), GHAT0_CHART.factor(math.pi, -y), atol=1e-10)
    assert np.all(GHAT0_CHART.factor(0.0, y) > 0)


def test_pullback_component_shapes():
    E, G = pullback_ghat0(np.zeros(3), np.array([0.0, 1.0, 2.0]))
    assert E.shape == G.shape == (3,)


def test_exports(tmp_path):
    rows = bipolar_table(3, 1, 8)
    assert len(rows) == 64 and rows[0][2] == pytest.approx(10.0)
    verts, faces = lawson_mesh(3, 1, 16, 8)
    assert verts.shape == (128, 4) and faces.shape == (128, 4)
    path = tmp_path / "t.obj"
    write_lawson_obj(path, 3, 1, 16, 8)
    assert path.read_text().count("\nv ") == 128
    with pytest.raises(DomainError):
        write_lawson_obj(path, 3, 1, axes=(1, 2, 5))
