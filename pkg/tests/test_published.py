import numpy as np
import pytest

from emrestore.errors import NotFoundError
from emrestore.published import (
    RAW_TEM_STEM_11_ENTRY,
    Modality,
    get_kernel,
    inventory,
    kernel_by_name,
    published_kernels,
)

# Each kernel written independently as the lower triangle of its quadrant
# (row i lists columns 0..i, counted from the corner), expanded by symmetry.
QUADRANTS = {
    ("tem", 3): "0.064 / 0.135 0.218",
    ("tem", 5): "-0.084 / -0.001 0.107 / 0.030 0.157 0.220",
    ("tem", 7): "-0.039 / -0.038 -0.009 / -0.025 0.035 0.114 / -0.018 0.058 0.153 0.204",
    ("tem", 11): "-0.017 / 0.000 0.009 / 0.001 -0.001 -0.015 / -0.005 -0.013 -0.022 -0.007 / "
                 "-0.006 -0.015 -0.010 0.035 0.111 / -0.006 -0.014 -0.001 0.059 0.152 0.202",
    ("stem", 3): "0.108 / 0.111 0.109",
    ("stem", 5): "0.004 / 0.026 0.057 / 0.040 0.089 0.089",
    ("stem", 7): "-0.016 / -0.004 0.007 / 0.007 0.026 0.057 / 0.012 0.035 0.071 0.089",
    ("stem", 11): "0.012 / 0.003 -0.006 / -0.001 -0.009 -0.010 / -0.002 -0.007 -0.001 0.012 / "
                  "0.000 -0.001 0.007 0.029 0.055 / 0.002 0.005 0.013 0.038 0.070 0.089",
    ("temstem", 3): "0.093 / 0.124 0.149",
    ("temstem", 5): "-0.061 / 0.016 0.091 / 0.042 0.116 0.142",
    ("temstem", 7): "-0.077 / -0.037 0.016 / -0.008 0.052 0.095 / 0.001 0.063 0.110 0.127",
    ("temstem", 11): "0.005 / -0.003 -0.008 / -0.015 -0.013 -0.011 / -0.022 -0.013 -0.001 0.021 / "
                     "-0.019 -0.004 0.017 0.050 0.088 / 0.017 0.001 0.025 0.062 0.105 0.123",
}


def expand(quadrant: str, n: int) -> np.ndarray:
    tri = [[float(v) for v in row.split()] for row in quadrant.split("/")]
    h = n // 2
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            a, b = min(i, n - 1 - i), min(j, n - 1 - j)
            a, b = max(a, b), min(a, b)
            out[i, j] = tri[a][b]
    assert len(tri) == h + 1
    return out


@pytest.mark.parametrize("key", sorted(QUADRANTS))
def test_kernel_matches_quadrant_transcription(key):
    mod, size = key
    k = get_kernel(Modality.parse(mod), size)
    np.testing.assert_array_equal(k.weights, expand(QUADRANTS[key], size))


@pytest.mark.parametrize("k", published_kernels(), ids=lambda k: k.name)
def test_fourfold_symmetry(k):
    w = k.weights
    np.testing.assert_array_equal(w, w.T)
    np.testing.assert_array_equal(w, w[::-1, :])
    np.testing.assert_array_equal(w, w[:, ::-1])


def test_spot_values():
    tem = get_kernel(Modality.TEM, 3).weights
    assert (tem[1, 1], tem[0, 0], tem[0, 1]) == (0.218, 0.064, 0.135)
    stem = get_kernel(Modality.STEM, 3).weights
    assert (stem[1, 1], stem[0, 0], stem[0, 1]) == (0.109, 0.108, 0.111)
    assert get_kernel("stem", 5).weights[2, 2] == 0.089


def test_sums():
    assert abs(get_kernel(Modality.TEM, 3).weights.sum() - 1.014) < 1e-9
    assert abs(get_kernel(Modality.STEM, 3).weights.sum() - 0.985) < 1e-9


def test_corrected_entry():
    w = get_kernel(Modality.TEM_STEM, 11).weights
    assert w[1, 10] == -0.003 and RAW_TEM_STEM_11_ENTRY == 1.0


def test_missing_kernel():
    with pytest.raises(NotFoundError, match="available"):
        get_kernel(Modality.TEM, 15)
    with pytest.raises(NotFoundError):
        kernel_by_name("tem-k4")
    assert kernel_by_name("temstem-k7").size == 7


def test_weights_read_only():
    with pytest.raises(ValueError):
        get_kernel(Modality.TEM, 3).weights[0, 0] = 1.0


def test_inventory_counts():
    inv = inventory()
    kinds = [e.kind for e in inv]
    assert (kinds.count("autoencoder"), kinds.count("kernel"), kinds.count("mlp")) == (14, 15, 14)
    assert not [e for e in inv if e.kind == "mlp" and e.modality is Modality.STEM and e.hidden_layers == 2]
    depths = {e.size for e in inv if e.kind == "autoencoder" and e.modality is Modality.TEM_STEM}
    assert depths == {1, 2, 4, 8, 16, 32, 64}
    assert {e.size for e in inv if e.kind == "autoencoder" and e.modality is Modality.TEM} == {1, 4, 16, 64}
    assert len(set(inv)) == len(inv)
