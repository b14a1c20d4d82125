"""
Configuration objects, random streams and worker-count resolution.

``TestConfig`` carries every tuning of a single test run and
``ExperimentGrid`` describes a Monte Carlo study; the latter is read from a
flat YAML mapping.
"""

import dataclasses
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import psutil
import yaml

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

THREADS_ENV = 'ELLIPTEST_THREADS'
SEED_MAX = 2 ** 64 - 1

# spawn keys separating the random streams derived from one seed
SPLIT_STREAM = 0
DEBIAS_STREAM = 1
JITTER_STREAM = 2
PAIR_STREAM = 3
DATA_STREAM = 4

WeightSpec = Union[str, Tuple[float, ...]]


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (seed, key...), reproducible across runs and platforms."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


def derive_seed(*words: int) -> int:
    """Hash integers into one 64-bit seed."""
    state = np.random.SeedSequence([int(w) for w in words]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def resolve_workers(requested: Optional[int] = None) -> int:
    """
    Number of worker processes to use.

    ``requested`` (or the physical core count when not given) is capped by the
    ELLIPTEST_THREADS environment variable when it is set.
    """
    base = requested if requested else (psutil.cpu_count(logical=False) or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            base = min(base, max(int(cap), 1))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {cap!r}")
    return max(int(base), 1)


def _weight_spec(value) -> WeightSpec:
    if isinstance(value, str):
        if value not in ('auto', 'uniform', 'optimal'):
            raise ConfigError(f"weights must be auto, uniform, optimal or a list of numbers, got {value!r}")
        return value
    try:
        return tuple(float(v) for v in value)
    except TypeError:
        raise ConfigError(f"cannot read weights from {value!r}")


@dataclass(frozen=True)
class TestConfig:
    """
    Tunings of one test run.

    Attributes
    ----------
    k_p, k_1 : int, optional
        Neighbor depths for the p-dimensional and the length entropies.
        Chosen by ``choose_k`` for the sample size in use when omitted.
    weights_p, weights_1 : str or tuple of float
        'auto', 'uniform', 'optimal' or explicit weights.
    bandwidth : float, optional
        KDE bandwidth for the length density; n^{-1/5} when omitted.
    B : int
        Debiasing resamples; 0 disables debiasing.
    alpha : float
        Test level, 0 < alpha < 1/2.
    c_exponent : float
        Exponent c of the n^{-c} term in the plug-in variance.
    variance_mode : str
        'inflation' (default) or 'plugin'.
    seed : int
        Seed for every random choice of the run.
    jitter : float, optional
        Half-width of uniform noise added to the data before testing.
    """
    __test__ = False  # not a pytest test class

    k_p: Optional[int] = None
    k_1: Optional[int] = None
    weights_p: WeightSpec = 'auto'
    weights_1: WeightSpec = 'uniform'
    bandwidth: Optional[float] = None
    B: int = 100
    alpha: float = 0.05
    c_exponent: float = 0.5
    variance_mode: str = 'inflation'
    seed: int = 0
    jitter: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'weights_p', _weight_spec(self.weights_p))
        object.__setattr__(self, 'weights_1', _weight_spec(self.weights_1))
        self.validate()

    def validate(self) -> None:
        if not 0 < self.alpha < 0.5:
            raise ConfigError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        if self.B < 0:
            raise ConfigError(f"B must be >= 0, got {self.B}")
        if not 0 <= self.seed <= SEED_MAX:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.variance_mode not in ('inflation', 'plugin'):
            raise ConfigError(f"variance_mode must be inflation or plugin, got {self.variance_mode!r}")
        if self.c_exponent <= 0:
            raise ConfigError(f"c_exponent must be positive, got {self.c_exponent}")
        for name in ('k_p', 'k_1'):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigError(f"{name} must be >= 1, got {value}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ConfigError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.jitter is not None and not self.jitter > 0:
            raise ConfigError(f"jitter must be positive, got {self.jitter}")

    def replace(self, **changes) -> 'TestConfig':
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        out = dataclasses.asdict(self)
        for name in ('weights_p', 'weights_1'):
            if isinstance(out[name], tuple):
                out[name] = list(out[name])
        return out


TEST_CONFIG_KEYS = ('k_p', 'k_1', 'weights_p', 'weights_1', 'bandwidth', 'B',
                    'c_exponent', 'variance_mode')
SETTING_OPTION_KEYS = ('w_shape', 'w_rate', 'truncation')


@dataclass(frozen=True)
class ExperimentGrid:
    """
    A Monte Carlo study over (setting, n, p, s) cells.

    ``s_values`` is either a tuple of departure levels or 'all' for 0..p in
    every cell. ``setting_options`` holds extra generator keywords (Setting 2's
    W shapes, rates and truncation mode).
    """
    settings: Tuple[int, ...]
    ns: Tuple[int, ...]
    ps: Tuple[int, ...]
    base_seed: int
    s_values: Union[str, Tuple[int, ...]] = (0,)
    reps: int = 200
    alpha: float = 0.05
    mode: str = 'unknown'
    test: TestConfig = field(default_factory=TestConfig)
    setting_options: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.reps < 1:
            raise ConfigError(f"reps must be >= 1, got {self.reps}")
        if self.mode not in ('known', 'unknown'):
            raise ConfigError(f"mode must be known or unknown, got {self.mode!r}")
        if not (self.settings and self.ns and self.ps):
            raise ConfigError("settings, ns and ps must be non-empty")
        if not 0 <= self.base_seed <= SEED_MAX:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.base_seed}")
        if not 0 < self.alpha < 0.5:
            raise ConfigError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        if isinstance(self.s_values, str) and self.s_values != 'all':
            raise ConfigError(f"s must be 'all' or a list of integers, got {self.s_values!r}")

    def s_range(self, p: int) -> Tuple[int, ...]:
        if self.s_values == 'all':
            return tuple(range(p + 1))
        return tuple(s for s in self.s_values if 0 <= s <= p)

    def replace(self, **changes) -> 'ExperimentGrid':
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> 'ExperimentGrid':
        """
        Build a grid from a flat mapping.

        Recognized keys: settings, ns, ps, s, reps, alpha, seed, mode, plus
        the TestConfig tunings (k_p, k_1, weights_p, weights_1, bandwidth, B,
        c_exponent, variance_mode) and the generator options (w_shape,
        w_rate, truncation).

        Raises
        ------
        ConfigError
            On unknown keys, a missing seed or malformed values.
        """
        if not isinstance(data, Mapping):
            raise ConfigError("grid config must be a key-value mapping")
        known = {'settings', 'ns', 'ps', 's', 'reps', 'alpha', 'seed', 'mode',
                 *TEST_CONFIG_KEYS, *SETTING_OPTION_KEYS}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown grid keys: {', '.join(unknown)}")
        if data.get('seed') is None:
            raise ConfigError("grid config needs an explicit seed")

        def ints(key, default=None) -> Tuple[int, ...]:
            value = data.get(key, default)
            if value is None:
                raise ConfigError(f"grid config is missing {key!r}")
            values = value if isinstance(value, (list, tuple)) else [value]
            try:
                return tuple(int(v) for v in values)
            except (TypeError, ValueError):
                raise ConfigError(f"{key!r} must be an integer or a list of integers")

        s_raw = data.get('s', [0])
        s_values = 'all' if s_raw == 'all' else ints('s', [0])
        alpha = float(data.get('alpha', 0.05))
        try:
            test = TestConfig(alpha=alpha, **{k: data[k] for k in TEST_CONFIG_KEYS if k in data})
            return cls(
                settings=ints('settings'),
                ns=ints('ns'),
                ps=ints('ps'),
                base_seed=int(data['seed']),
                s_values=s_values,
                reps=int(data.get('reps', 200)),
                alpha=alpha,
                mode=str(data.get('mode', 'unknown')),
                test=test,
                setting_options={k: data[k] for k in SETTING_OPTION_KEYS if k in data},
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid grid config: {exc}")

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> 'ExperimentGrid':
        """Read a grid from a YAML file holding a flat mapping."""
        try:
            with open(path) as f:
                data = yaml.safe_load(f)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}")
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}")
        return cls.from_mapping(data or {})


PRESET_DIR = Path(__file__).parent / 'presets'


def preset_path(name: str) -> Path:
    """Path of a bundled grid preset."""
    path = PRESET_DIR / f'{name}.yaml'
    if not path.is_file():
        available = sorted(p.stem for p in PRESET_DIR.glob('*.yaml'))
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(available)}")
    return path


def list_presets() -> Sequence[str]:
    return sorted(p.stem for p in PRESET_DIR.glob('*.yaml'))
