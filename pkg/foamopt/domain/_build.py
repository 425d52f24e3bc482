import inspect
from typing import Union

from foamopt.errors import ConfigError
from foamopt.utils import Config, instantiate
from . import _primitives
from ._primitives import DomainField


def _domain_classes():
    return {
        k.lower(): v
        for k, v in inspect.getmembers(_primitives, inspect.isclass)
        if issubclass(v, DomainField) and v is not DomainField
    }


def domain_from_config(config: Union[dict, Config], prefix: str = "domain") -> DomainField:
    """Build the design domain from the nested ``domain`` entry of a config.

    The entry is a mapping with a ``type`` (``box``, ``sphere``, ``cylinder``,
    ``union`` or ``sdfgrid``, case insensitive) and the constructor arguments of
    that primitive. ``union`` takes a list of such mappings as ``children``.

    Args:
        config (dict, foamopt.utils.Config): options holding ``prefix``
        prefix (str): key of the domain entry

    Return:
        domain (foamopt.domain.DomainField)
    """
    spec = config.get(prefix, None)
    if spec is None:
        raise ConfigError(f"Domain with key `{prefix}` isn't present in this config")
    return _build_domain(spec, where=prefix)


def _build_domain(spec, where: str) -> DomainField:
    if isinstance(spec, DomainField):
        return spec
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(f"`{where}` must be a mapping with a `type` entry, got {spec!r}")

    name = str(spec["type"]).lower().replace("_", "")
    classes = _domain_classes()
    if name == "disk":
        name = "sphere"
    if name not in classes:
        raise ConfigError(
            f"Unknown domain type `{spec['type']}` in `{where}`; choose from {sorted(classes)}"
        )
    builder = classes[name]

    args = {k: v for k, v in spec.items() if k != "type"}
    allowed = set(inspect.signature(builder.__init__).parameters) - {"self"}
    unknown = set(args) - allowed
    if unknown:
        raise ConfigError(
            f"Unknown option(s) {sorted(unknown)} for domain type `{spec['type']}` in `{where}`"
        )

    positional = {}
    if builder is _primitives.Union:
        children = args.pop("children", None)
        if not isinstance(children, list):
            raise ConfigError(f"`{where}` of type union needs a list of `children`")
        positional["children"] = [
            _build_domain(c, where=f"{where}.children[{i}]") for i, c in enumerate(children)
        ]

    instance, _ = instantiate(builder, positional_args=positional, all_args=args)
    return instance
