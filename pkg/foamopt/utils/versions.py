from typing import Dict

import logging

import numpy
import scipy
import torch

import foamopt

_DEFAULT_VERSION_CODES = [numpy, scipy, torch, foamopt]


def get_config_code_versions(config) -> Dict[str, str]:
    code_versions = {}
    for code in _DEFAULT_VERSION_CODES:
        version = config.get(f"{code.__name__}_version", None)
        if version is not None:
            code_versions[code.__name__] = version
    return code_versions


def get_current_code_versions() -> Dict[str, str]:
    return {code.__name__: str(code.__version__) for code in _DEFAULT_VERSION_CODES}


def check_code_version(config, add_to_config: bool = False):
    """Warn when a restarted run was written by other library versions."""
    current = get_current_code_versions()
    recorded = get_config_code_versions(config)

    for code, version in recorded.items():
        if version != current.get(code, version):
            logging.warning(
                "Resuming a run created with different library version(s) may change the trajectory."
                f" Current {code} version: {current[code]} "
                f"vs  original version: {version}"
            )

    if add_to_config:
        for code, version in current.items():
            config[f"{code}_version"] = version
