"""
Setting Registry for elliptest

This module provides utilities for registering and looking up the
simulation settings (data generators) used by the Monte Carlo harness.
"""

import inspect
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

Sampler = Callable[..., np.ndarray]
NullMoments = Callable[[int], Tuple[np.ndarray, np.ndarray]]


def sampler_keywords(sampler: Callable) -> List[Dict[str, Any]]:
    """
    Grid options a sampler understands.

    Every keyword parameter after the leading ``spec`` is an option a grid
    config may set for the setting. Each entry carries the option ``name``,
    its ``default`` (None when the option is required) and the annotated
    ``type`` as text. ``elliptest settings`` lists them, and
    ``SettingRegistry.sampler_options`` filters grid options with them.
    """
    try:
        params = list(inspect.signature(sampler).parameters.values())[1:]
    except (TypeError, ValueError):
        return []
    keyword_kinds = (inspect.Parameter.POSITIONAL_OR_KEYWORD, inspect.Parameter.KEYWORD_ONLY)
    empty = inspect.Parameter.empty
    return [
        {
            'name': p.name,
            'default': None if p.default is empty else p.default,
            'type': None if p.annotation is empty else inspect.formatannotation(p.annotation),
        }
        for p in params if p.kind in keyword_kinds
    ]


class SettingRegistry:
    """
    Global registry for simulation settings.

    Each entry maps an integer setting id to its sampler, a display name,
    a description, search keywords and, optionally, the true mean and
    covariance of the setting's null (s = 0) distribution.
    """

    _settings: Dict[int, Dict[str, Any]] = {}

    @classmethod
    def register(
        cls,
        setting_id: int,
        sampler: Sampler,
        name: Optional[str] = None,
        description: Optional[str] = None,
        keywords: Optional[List[str]] = None,
        null_moments: Optional[NullMoments] = None,
    ) -> None:
        """
        Register a setting.

        Parameters
        ----------
        setting_id : int
            Unique positive identifier of the setting
        sampler : Callable
            Function ``sampler(spec, **options)`` returning an n x p matrix
        name : str, optional
            Display name. Defaults to ``f"Setting {setting_id}"``.
        description : str, optional
            One-line description of the data-generating process
        keywords : List[str], optional
            Keywords for searching/filtering settings
        null_moments : Callable[[int], tuple], optional
            Maps p to the (mean, covariance) of the s = 0 distribution.
            Needed to run the setting in known-moments mode.

        Raises
        ------
        ValueError
            If the id is not positive or already registered.
        """
        if not setting_id or setting_id < 1:
            raise ValueError("setting_id must be a positive integer")
        if setting_id in cls._settings:
            raise ValueError(f"Setting '{setting_id}' is already registered")

        cls._settings[setting_id] = {
            'id': setting_id,
            'sampler': sampler,
            'name': name or f"Setting {setting_id}",
            'description': description or '',
            'keywords': keywords or [],
            'parameters': sampler_keywords(sampler),
            'null_moments': null_moments,
        }

    @classmethod
    def unregister(cls, setting_id: int) -> None:
        """Remove a setting if present."""
        cls._settings.pop(setting_id, None)

    @classmethod
    def get_setting(cls, setting_id: int) -> Optional[Dict[str, Any]]:
        """
        Get a registered setting by ID.

        Returns
        -------
        dict or None
            The setting definition, or None if not found
        """
        return cls._settings.get(setting_id)

    @classmethod
    def get_all_settings(cls) -> Dict[int, Dict[str, Any]]:
        """Get a copy of all registered settings, keyed by id."""
        return dict(sorted(cls._settings.items()))

    @classmethod
    def clear(cls) -> None:
        """Clear all registered settings."""
        cls._settings.clear()

    @classmethod
    def resolve_sampler(cls, setting_id: int) -> Sampler:
        """
        Return the sampler of a setting.

        Raises
        ------
        KeyError
            If the setting is not registered.
        """
        info = cls.get_setting(setting_id)
        if not info:
            raise KeyError(f"Setting '{setting_id}' is not registered")
        return info['sampler']

    @classmethod
    def sampler_options(cls, setting_id: int, options: Dict[str, Any]) -> Dict[str, Any]:
        """Keep only the options the setting's sampler accepts."""
        info = cls.get_setting(setting_id) or {}
        accepted = {p['name'] for p in info.get('parameters', [])}
        return {k: v for k, v in options.items() if k in accepted}


def get_registered_settings_metadata() -> List[Dict[str, Any]]:
    """
    Serializable metadata of all registered settings (sampler excluded).

    Returns
    -------
    List[Dict[str, Any]]
        One dict per setting with id, name, description, keywords, parameters
        and whether known-moments mode is available.
    """
    out = []
    for info in SettingRegistry.get_all_settings().values():
        out.append({
            'id': info['id'],
            'name': info['name'],
            'description': info['description'],
            'keywords': list(info['keywords']),
            'parameters': [
                {k: (v if isinstance(v, (str, int, float, bool, type(None))) else list(v)) for k, v in p.items()}
                for p in info['parameters']
            ],
            'known_mode': info['null_moments'] is not None,
        })
    return out
