"""Experiment configuration: defaults, file parsing, and serialization.

Config files are plain text with [section] headers and key = value lines,
all SI units. A noise PSD may be given either as noise_psd (W/Hz) or as
noise_psd_dbm (dBm/Hz, converted once at parse time). Precedence is
CLI flag > config file > built-in default; the resolved config serializes
to text and re-parses to an identical value.
"""

import configparser
from dataclasses import dataclass, replace

from .channel import ChannelParams, dbm_per_hz_to_w_per_hz
from .geometry import GeometryConfig
from .ppo import PpoConfig
from .qoe import QoEWeights


class ConfigError(ValueError):
    """Unreadable, unknown, or invalid configuration input."""


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    iterations: int = 400
    workers: int = 4
    episodes_per_worker: int = 1
    slots_per_episode: int = 50
    eval_episodes: int = 100

    def __post_init__(self):
        if min(self.iterations, self.workers, self.episodes_per_worker) < 1:
            raise ConfigError("iterations, workers, episodes_per_worker must be >= 1")
        if self.slots_per_episode < 1 or self.eval_episodes < 1:
            raise ConfigError("slots_per_episode and eval_episodes must be >= 1")


@dataclass(frozen=True)
class PowerConfig:
    p_min: float = 1.0
    p_max: float = 5.0

    def __post_init__(self):
        if not 0 < self.p_min <= self.p_max:
            raise ConfigError("need 0 < p_min <= p_max")


@dataclass(frozen=True)
class CodecConfig:
    grid_h: int = 16
    grid_w: int = 16
    codebook_size: int = 64
    feature_dim: int = 4
    kappa: float = 0.95
    fps: float = 30.0
    decay: float = 0.99
    epsilon: float = 1e-5

    def __post_init__(self):
        if min(self.grid_h, self.grid_w, self.feature_dim) < 1:
            raise ConfigError("codec grid dims must be >= 1")
        if not 0.0 <= self.kappa <= 1.0:
            raise ConfigError("kappa must lie in [0, 1]")
        if self.fps <= 0:
            raise ConfigError("fps must be positive")


@dataclass(frozen=True)
class StreamConfig:
    drop_mode: str = "stride"
    loss_prob: float = 0.1

    def __post_init__(self):
        if self.drop_mode not in ("stride", "random"):
            raise ConfigError(f"unknown drop_mode {self.drop_mode!r}")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ConfigError("loss_prob must lie in [0, 1]")


@dataclass(frozen=True)
class TrainerConfig:
    learning_rate: float = 5e-4
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    entropy_weight: float = 0.01
    epochs: int = 4
    minibatch: int = 64
    normalize_adv: bool = True
    include_prev_bitrate: bool = True

    def ppo(self) -> PpoConfig:
        return PpoConfig(
            clip_eps=self.clip_eps,
            entropy_weight=self.entropy_weight,
            gamma=self.gamma,
            gae_lambda=self.gae_lambda,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            minibatch=self.minibatch,
            normalize_adv=self.normalize_adv,
        )


UAV_COUNT = 4  # the corridor layout covers exactly four UAVs


@dataclass(frozen=True)
class ExperimentConfig:
    run: RunConfig
    geometry: GeometryConfig
    channel: ChannelParams
    power: PowerConfig
    qoe: QoEWeights
    codec: CodecConfig
    stream: StreamConfig
    recovery_window: int
    trainer: TrainerConfig

    def __post_init__(self):
        if self.recovery_window < 1:
            raise ConfigError("recovery window must be >= 1")


def default_config() -> ExperimentConfig:
    return ExperimentConfig(
        run=RunConfig(),
        geometry=GeometryConfig(),
        channel=ChannelParams(),
        power=PowerConfig(),
        qoe=QoEWeights(),
        codec=CodecConfig(),
        stream=StreamConfig(),
        recovery_window=6,
        trainer=TrainerConfig(),
    )


def _parse_bool(raw: str, section: str, key: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"invalid boolean for {section}.{key}: {raw!r}")


# section -> key -> (attribute path, type); tuples are flattened to _x/_y/_z keys
_SCHEMA = {
    "run": {
        "seed": int,
        "iterations": int,
        "workers": int,
        "episodes_per_worker": int,
        "slots_per_episode": int,
        "eval_episodes": int,
    },
    "geometry": {
        "center_x": float,
        "center_y": float,
        "radius_r0": float,
        "safety_rs": float,
        "corridor_depth_d": float,
        "z_min": float,
        "z_max": float,
        "ground_x": float,
        "ground_y": float,
        "ground_z": float,
        "max_step": float,
        "uav_count": int,
    },
    "channel": {
        "rician_factor": float,
        "gain": float,
        "carrier_hz": float,
        "light_speed": float,
        "alpha_los": float,
        "alpha_nlos": float,
        "bandwidth_hz": float,
        "noise_psd": float,
        "noise_psd_dbm": float,
        "geometric_phase": bool,
    },
    "power": {"p_min": float, "p_max": float},
    "qoe": {
        "alpha": float,
        "beta": float,
        "gamma_rebuf": float,
        "t_c": float,
        "v_min": float,
        "v_max": float,
        "slot_seconds": float,
        "delay_cap_factor": float,
    },
    "codec": {
        "grid_h": int,
        "grid_w": int,
        "codebook_size": int,
        "feature_dim": int,
        "kappa": float,
        "fps": float,
        "decay": float,
        "epsilon": float,
    },
    "stream": {"drop_mode": str, "loss_prob": float},
    "recovery": {"window": int},
    "trainer": {
        "learning_rate": float,
        "gamma": float,
        "gae_lambda": float,
        "clip_eps": float,
        "entropy_weight": float,
        "epochs": int,
        "minibatch": int,
        "normalize_adv": bool,
        "include_prev_bitrate": bool,
    },
}


def _defaults_as_values() -> dict:
    cfg = default_config()
    geo, chan = cfg.geometry, cfg.channel
    return {
        "run": {
            "seed": cfg.run.seed,
            "iterations": cfg.run.iterations,
            "workers": cfg.run.workers,
            "episodes_per_worker": cfg.run.episodes_per_worker,
            "slots_per_episode": cfg.run.slots_per_episode,
            "eval_episodes": cfg.run.eval_episodes,
        },
        "geometry": {
            "center_x": geo.center[0],
            "center_y": geo.center[1],
            "radius_r0": geo.radius_r0,
            "safety_rs": geo.safety_rs,
            "corridor_depth_d": geo.corridor_depth_d,
            "z_min": geo.z_min,
            "z_max": geo.z_max,
            "ground_x": geo.ground_position[0],
            "ground_y": geo.ground_position[1],
            "ground_z": geo.ground_position[2],
            "max_step": geo.max_step,
            "uav_count": UAV_COUNT,
        },
        "channel": {
            "rician_factor": chan.rician_factor,
            "gain": chan.gain,
            "carrier_hz": chan.carrier_hz,
            "light_speed": chan.light_speed,
            "alpha_los": chan.alpha_los,
            "alpha_nlos": chan.alpha_nlos,
            "bandwidth_hz": chan.bandwidth_hz,
            "noise_psd": chan.noise_psd,
            "geometric_phase": chan.geometric_phase,
        },
        "power": {"p_min": cfg.power.p_min, "p_max": cfg.power.p_max},
        "qoe": {
            "alpha": cfg.qoe.alpha,
            "beta": cfg.qoe.beta,
            "gamma_rebuf": cfg.qoe.gamma_rebuf,
            "t_c": cfg.qoe.t_c,
            "v_min": cfg.qoe.v_min,
            "v_max": cfg.qoe.v_max,
            "slot_seconds": cfg.qoe.slot_seconds,
            "delay_cap_factor": cfg.qoe.delay_cap_factor,
        },
        "codec": {
            "grid_h": cfg.codec.grid_h,
            "grid_w": cfg.codec.grid_w,
            "codebook_size": cfg.codec.codebook_size,
            "feature_dim": cfg.codec.feature_dim,
            "kappa": cfg.codec.kappa,
            "fps": cfg.codec.fps,
            "decay": cfg.codec.decay,
            "epsilon": cfg.codec.epsilon,
        },
        "stream": {"drop_mode": cfg.stream.drop_mode, "loss_prob": cfg.stream.loss_prob},
        "recovery": {"window": cfg.recovery_window},
        "trainer": {
            "learning_rate": cfg.trainer.learning_rate,
            "gamma": cfg.trainer.gamma,
            "gae_lambda": cfg.trainer.gae_lambda,
            "clip_eps": cfg.trainer.clip_eps,
            "entropy_weight": cfg.trainer.entropy_weight,
            "epochs": cfg.trainer.epochs,
            "minibatch": cfg.trainer.minibatch,
            "normalize_adv": cfg.trainer.normalize_adv,
            "include_prev_bitrate": cfg.trainer.include_prev_bitrate,
        },
    }


def _build(values: dict) -> ExperimentConfig:
    g = values["geometry"]
    if g["uav_count"] != UAV_COUNT:
        raise ConfigError("uav_count must be 4; other deployments are not defined")
    c = values["channel"]
    try:
        cfg = ExperimentConfig(
            run=RunConfig(
                seed=values["run"]["seed"],
                iterations=values["run"]["iterations"],
                workers=values["run"]["workers"],
                episodes_per_worker=values["run"]["episodes_per_worker"],
                slots_per_episode=values["run"]["slots_per_episode"],
                eval_episodes=values["run"]["eval_episodes"],
            ),
            geometry=GeometryConfig(
                center=(g["center_x"], g["center_y"]),
                radius_r0=g["radius_r0"],
                safety_rs=g["safety_rs"],
                corridor_depth_d=g["corridor_depth_d"],
                z_min=g["z_min"],
                z_max=g["z_max"],
                ground_position=(g["ground_x"], g["ground_y"], g["ground_z"]),
                max_step=g["max_step"],
            ),
            channel=ChannelParams(
                rician_factor=c["rician_factor"],
                gain=c["gain"],
                carrier_hz=c["carrier_hz"],
                light_speed=c["light_speed"],
                alpha_los=c["alpha_los"],
                alpha_nlos=c["alpha_nlos"],
                bandwidth_hz=c["bandwidth_hz"],
                noise_psd=c["noise_psd"],
                geometric_phase=c["geometric_phase"],
            ),
            power=PowerConfig(p_min=values["power"]["p_min"], p_max=values["power"]["p_max"]),
            qoe=QoEWeights(
                alpha=values["qoe"]["alpha"],
                beta=values["qoe"]["beta"],
                gamma_rebuf=values["qoe"]["gamma_rebuf"],
                t_c=values["qoe"]["t_c"],
                v_min=values["qoe"]["v_min"],
                v_max=values["qoe"]["v_max"],
                slot_seconds=values["qoe"]["slot_seconds"],
                delay_cap_factor=values["qoe"]["delay_cap_factor"],
            ),
            codec=CodecConfig(**values["codec"]),
            stream=StreamConfig(**values["stream"]),
            recovery_window=values["recovery"]["window"],
            trainer=TrainerConfig(**values["trainer"]),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid parameter: {exc}") from exc
    return cfg


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Resolve defaults, an optional config file, and typed CLI overrides, in order.

    ``overrides`` maps (section, key) to already-typed values.
    """
    values = _defaults_as_values()
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"unreadable config file {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file {path}: {exc}") from exc
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"unknown config key {section}.{key}")
                kind = _SCHEMA[section][key]
                try:
                    if kind is bool:
                        value = _parse_bool(raw, section, key)
                    else:
                        value = kind(raw)
                except ValueError as exc:
                    raise ConfigError(f"invalid value for {section}.{key}: {raw!r}") from exc
                if section == "channel" and key == "noise_psd_dbm":
                    values["channel"]["noise_psd"] = dbm_per_hz_to_w_per_hz(value)
                else:
                    values[section][key] = value
    for (section, key), value in (overrides or {}).items():
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown override {section}.{key}")
        values[section][key] = value
    return _build(values)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Resolved config as deterministic text; parses back to an identical value."""
    values = _config_as_values(cfg)
    lines = []
    for section in _SCHEMA:
        lines.append(f"[{section}]")
        for key in _SCHEMA[section]:
            if key == "noise_psd_dbm":
                continue  # resolved form keeps W/Hz only
            lines.append(f"{key} = {_format_value(values[section][key])}")
        lines.append("")
    return "\n".join(lines)


def _config_as_values(cfg: ExperimentConfig) -> dict:
    base = _defaults_as_values()
    base["run"].update(
        seed=cfg.run.seed,
        iterations=cfg.run.iterations,
        workers=cfg.run.workers,
        episodes_per_worker=cfg.run.episodes_per_worker,
        slots_per_episode=cfg.run.slots_per_episode,
        eval_episodes=cfg.run.eval_episodes,
    )
    geo, chan = cfg.geometry, cfg.channel
    base["geometry"].update(
        center_x=geo.center[0],
        center_y=geo.center[1],
        radius_r0=geo.radius_r0,
        safety_rs=geo.safety_rs,
        corridor_depth_d=geo.corridor_depth_d,
        z_min=geo.z_min,
        z_max=geo.z_max,
        ground_x=geo.ground_position[0],
        ground_y=geo.ground_position[1],
        ground_z=geo.ground_position[2],
        max_step=geo.max_step,
    )
    base["channel"].update(
        rician_factor=chan.rician_factor,
        gain=chan.gain,
        carrier_hz=chan.carrier_hz,
        light_speed=chan.light_speed,
        alpha_los=chan.alpha_los,
        alpha_nlos=chan.alpha_nlos,
        bandwidth_hz=chan.bandwidth_hz,
        noise_psd=chan.noise_psd,
        geometric_phase=chan.geometric_phase,
    )
    base["power"].update(p_min=cfg.power.p_min, p_max=cfg.power.p_max)
    base["qoe"].update(
        alpha=cfg.qoe.alpha,
        beta=cfg.qoe.beta,
        gamma_rebuf=cfg.qoe.gamma_rebuf,
        t_c=cfg.qoe.t_c,
        v_min=cfg.qoe.v_min,
        v_max=cfg.qoe.v_max,
        slot_seconds=cfg.qoe.slot_seconds,
        delay_cap_factor=cfg.qoe.delay_cap_factor,
    )
    base["codec"].update(
        grid_h=cfg.codec.grid_h,
        grid_w=cfg.codec.grid_w,
        codebook_size=cfg.codec.codebook_size,
        feature_dim=cfg.codec.feature_dim,
        kappa=cfg.codec.kappa,
        fps=cfg.codec.fps,
        decay=cfg.codec.decay,
        epsilon=cfg.codec.epsilon,
    )
    base["stream"].update(drop_mode=cfg.stream.drop_mode, loss_prob=cfg.stream.loss_prob)
    base["recovery"].update(window=cfg.recovery_window)
    base["trainer"].update(
        learning_rate=cfg.trainer.learning_rate,
        gamma=cfg.trainer.gamma,
        gae_lambda=cfg.trainer.gae_lambda,
        clip_eps=cfg.trainer.clip_eps,
        entropy_weight=cfg.trainer.entropy_weight,
        epochs=cfg.trainer.epochs,
        minibatch=cfg.trainer.minibatch,
        normalize_adv=cfg.trainer.normalize_adv,
        include_prev_bitrate=cfg.trainer.include_prev_bitrate,
    )
    return base


def with_channel(cfg: ExperimentConfig, **channel_fields) -> ExperimentConfig:
    """Sweep helper: a copy of cfg with channel fields replaced."""
    return replace(cfg, channel=replace(cfg.channel, **channel_fields))
