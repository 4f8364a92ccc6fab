import numpy as np
import pytest
import torch

from tryon_flow.dit import ModelConfig, TryOnDiT
from tryon_flow.rope3d import GARMENT, SPATIAL, ConditionGroup


def randomize(model: torch.nn.Module, seed: int = 0, std: float = 0.2) -> torch.nn.Module:
    """Overwrite every parameter (including the zero-initialised gates) with noise
    so that no branch of the network is trivially silent."""
    g = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for p in model.parameters():
            p.copy_(torch.randn(p.shape, generator=g, dtype=torch.float64).to(p.dtype) * std)
    return model


def make_model(seed=0, dtype=torch.float32, **kw) -> TryOnDiT:
    base = dict(token_dim=12, d_model=24, n_heads=2, n_layers=2, style_vocab=40, text_len=4)
    base.update(kw)
    torch.manual_seed(seed)
    return randomize(TryOnDiT(ModelConfig(**base)), seed).to(dtype)


def make_conditions(z_shape, n_garments=1, merged=True, token_dim=12, batch=1, seed=0, dtype=torch.float32):
    rng = np.random.default_rng(seed)
    h, w = z_shape
    shapes = [(SPATIAL, h, w)]
    shapes.append((SPATIAL, h // 2, w // 2) if merged else (SPATIAL, h, w))
    shapes += [(GARMENT, h // 2, w // 2)] * n_garments
    out = []
    for i, (kind, hc, wc) in enumerate(shapes, start=1):
        tok = torch.as_tensor(rng.standard_normal((batch, hc, wc, token_dim)), dtype=dtype)
        out.append(ConditionGroup.build(i, kind, tok, z_shape))
    return out


@pytest.fixture
def tiny_model():
    return make_model()


# --- acceptance reporting ---------------------------------------------------

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record(name: str, passed: bool, detail: str) -> None:
    ACCEPTANCE[name] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in ACCEPTANCE.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
