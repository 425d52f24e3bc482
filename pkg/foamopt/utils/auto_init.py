from typing import Optional, Union, List
import inspect
import logging

from .config import Config
from foamopt.errors import ConfigError


def instantiate(
    builder,
    prefix: Optional[Union[str, List[str]]] = [],
    positional_args: dict = {},
    optional_args: Optional[dict] = None,
    all_args: Optional[dict] = None,
    remove_kwargs: bool = True,
    return_args_only: bool = False,
):
    """Build ``builder`` from the keys of flat option dictionaries.

    A constructor argument ``young`` of ``Material`` is filled from ``young``,
    ``Material_young`` or ``{prefix}_young`` (for instance ``material_young``).
    Priority:

        all_args[key] < all_args[prefix_key] < optional_args[key] < optional_args[prefix_key] < positional_args

    Args:
        builder: class or function to call
        prefix: extra prefix(es) used to address the option keys
        positional_args: arguments with top priority, passed through unchanged
        optional_args: second priority group to search for keys
        all_args: third priority group to search for keys
        remove_kwargs: if True, ``**kwargs`` of the builder does not accept unknown keys
        return_args_only: if True, do not call the builder, only return the arguments

    Returns:
        (instance, final_args), or (key_mapping, final_args) when ``return_args_only``
    """

    prefix_list = [builder.__name__] if inspect.isclass(builder) else []
    if isinstance(prefix, str):
        prefix_list += [prefix]
    elif isinstance(prefix, list):
        prefix_list += prefix
    else:
        raise ValueError(f"prefix has the wrong type {type(prefix)}")

    config = Config.from_class(builder, remove_kwargs=remove_kwargs)

    key_mapping = {}
    for name, args in (("all", all_args), ("optional", optional_args)):
        if args is None:
            continue
        _keys = config.update(args)
        key_mapping[name] = {k: k for k in _keys}
        for prefix_str in prefix_list:
            key_mapping[name].update(config.update_w_prefix(args, prefix=prefix_str))

    # for logging only, remove the overlapped keys
    if "all" in key_mapping and "optional" in key_mapping:
        key_mapping["all"] = {
            k: v
            for k, v in key_mapping["all"].items()
            if k not in key_mapping["optional"]
        }

    final_optional_args = dict(config)
    for key in positional_args:
        final_optional_args.pop(key, None)
        for t in key_mapping:
            key_mapping[t].pop(key, None)

    if return_args_only:
        return key_mapping, final_optional_args

    logging.debug(f"instantiate {builder.__name__}")
    for t in key_mapping:
        for k, v in key_mapping[t].items():
            string = f" {t:>10s}_args :  {k:>30s}"
            if k != v:
                string += f" <- {v:>30s}"
            logging.debug(string)

    try:
        instance = builder(**positional_args, **final_optional_args)
    except (TypeError, ValueError) as e:
        raise ConfigError(
            f"Invalid options for {builder.__name__} (prefix `{prefix}`): {e}"
        ) from e

    return instance, final_optional_args
