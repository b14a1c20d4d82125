"""
Decorators for registering simulation settings in elliptest.

Provides @register_setting to declare a sampler and its metadata in one place.
"""

from functools import wraps
from typing import Any, Callable, List, Optional

from .setting_registry import NullMoments, SettingRegistry


def register_setting(
    setting_id: int,
    name: Optional[str] = None,
    description: Optional[str] = None,
    keywords: Optional[List[str]] = None,
    null_moments: Optional[NullMoments] = None,
):
    """
    Decorator to register a sampler as a simulation setting.

    The sampler must accept a ``SettingSpec`` as first argument; any further
    keyword parameters become setting options that grid configs can set.

    Parameters
    ----------
    setting_id : int
        Unique identifier for the setting
    name : str, optional
        Display name for the setting. Defaults to "Setting <id>".
    description : str, optional
        Description shown by ``elliptest settings``
    keywords : List[str], optional
        Keywords for searching/filtering settings
    null_moments : Callable[[int], tuple], optional
        Maps p to the true (mean, covariance) at s = 0

    Returns
    -------
    Callable
        Decorator function

    Examples
    --------
    >>> import numpy as np
    >>> from elliptest.decorators import register_setting
    >>>
    >>> @register_setting(
    ...     99,
    ...     name='Gaussian',
    ...     description='Standard normal rows',
    ...     null_moments=lambda p: (np.zeros(p), np.eye(p)),
    ... )
    ... def gaussian(spec):
    ...     return np.random.default_rng(spec.seed).standard_normal((spec.n, spec.p))
    """
    def decorator(func: Callable[..., Any]) -> Callable[..., Any]:
        SettingRegistry.register(
            setting_id=setting_id,
            sampler=func,
            name=name,
            description=description,
            keywords=keywords,
            null_moments=null_moments,
        )

        @wraps(func)
        def wrapper(*args, **kwargs):
            return func(*args, **kwargs)

        return wrapper

    return decorator
