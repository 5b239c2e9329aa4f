"""Model zoo and registry."""

from .base import ModelDescriptor
from .dyadic import HeavyTail, dyadic_chain, heavy_tail_nu, identity_chain
from .ifs import ifs_torus
from .lattice import lattice_model

REGISTRY = {
    "dyadic": dyadic_chain,
    "ifs": ifs_torus,
    "lattice": lattice_model,
    "identity": identity_chain,
}


def get_model(model_id: str) -> ModelDescriptor:
    try:
        return REGISTRY[model_id]()
    except KeyError:
        raise KeyError(f"unknown model {model_id!r}; choose from {sorted(REGISTRY)}") from None


def family_presets(model_id: str = "dyadic") -> list:
    """Test-function families configured for one model of the zoo."""
    return get_model(model_id).families()


__all__ = ["ModelDescriptor", "REGISTRY", "get_model", "family_presets", "dyadic_chain",
           "ifs_torus", "lattice_model", "identity_chain", "heavy_tail_nu", "HeavyTail"]
