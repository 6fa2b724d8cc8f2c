"""Experiment configs, the end-to-end pricing pipeline, and MAPE scoring.

Config files are plain key=value text with [section] headers; unknown
sections or keys are hard errors so hyperparameter typos cannot pass
silently. Reports are CSV rows plus a trailing MAPE summary line, with
run metadata (config echo, version, wall time) in a sidecar file so
the report itself is byte-identical across reruns of the same seed.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .baselines import bs_price, fit_linear_pricer, gbm_mc_option, lr_price
from .futures import (
    estimate_carry,
    fit_dividends,
    predict_dividend,
    price_commodity,
    price_equity_futures,
)
from .gan import GanConfig, GanModel, TrainReport, load_checkpoint, sample, train
from .market_data import (
    DEFAULT_DT,
    load_dividends,
    load_price_series,
    load_quotes,
)
from .options import OptionContract, PricingError, payoff_index, price_option
from .similarity import rank_and_select, retained_count
from .windowing import search_stride

MODEL_KINDS = ("gan-mc", "mc", "bs", "lr", "lr-itm", "lr-otm")


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    """Pipeline failure annotated with the stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


class CollapseError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    prices_path: str = ""
    symbol: str = ""
    dividends_path: str = ""
    quotes_path: str = ""
    quote_id: str = ""
    contracts_path: str = ""
    lr_train_rows: int = 0
    model: str = "gan-mc"
    r: float = 0.05
    dt: float = DEFAULT_DT
    T: int = 128
    n1: int = 290
    n2: int = 5120
    n3: int = 50
    alpha: float = 0.8
    seed: int = 0
    noise_dim: int = 32
    epochs: int = 2000
    batch_size: int = 64
    lr_generator: float = 2e-4
    lr_discriminator: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    adam_eps: float = 1e-8
    delta_loss: float = 0.05
    eps_std: float = 1e-4
    k_epochs: int = 20
    probe_epochs: int = 200
    checkpoint_path: str = ""

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.model!r}")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must be in (0,1), got {self.alpha}")
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")


# (section, key) -> (field name, parser)
_CONFIG_SCHEMA = {
    ("data", "prices"): ("prices_path", str),
    ("data", "symbol"): ("symbol", str),
    ("data", "dividends"): ("dividends_path", str),
    ("data", "quotes"): ("quotes_path", str),
    ("data", "quote_id"): ("quote_id", str),
    ("contracts", "file"): ("contracts_path", str),
    ("contracts", "lr_train_rows"): ("lr_train_rows", int),
    ("model", "kind"): ("model", str),
    ("model", "r"): ("r", float),
    ("model", "dt"): ("dt", float),
    ("model", "T"): ("T", int),
    ("model", "N1"): ("n1", int),
    ("model", "N2"): ("n2", int),
    ("model", "N3"): ("n3", int),
    ("model", "alpha"): ("alpha", float),
    ("model", "seed"): ("seed", int),
    ("gan", "noise_dim"): ("noise_dim", int),
    ("gan", "epochs"): ("epochs", int),
    ("gan", "batch_size"): ("batch_size", int),
    ("gan", "lr_generator"): ("lr_generator", float),
    ("gan", "lr_discriminator"): ("lr_discriminator", float),
    ("gan", "beta1"): ("beta1", float),
    ("gan", "beta2"): ("beta2", float),
    ("gan", "adam_eps"): ("adam_eps", float),
    ("gan", "delta_loss"): ("delta_loss", float),
    ("gan", "eps_std"): ("eps_std", float),
    ("gan", "k_epochs"): ("k_epochs", int),
    ("gan", "probe_epochs"): ("probe_epochs", int),
    ("gan", "checkpoint"): ("checkpoint_path", str),
}

_SECTIONS = {section for section, _ in _CONFIG_SCHEMA}


def parse_config(path) -> ExperimentConfig:
    """Parse a key=value config file; unknown sections or keys are errors."""
    values: dict[str, object] = {}
    section = None
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                if section not in _SECTIONS:
                    raise ConfigError(f"{path}:{line_no}: unknown section [{section}]")
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected key = value")
            if section is None:
                raise ConfigError(f"{path}:{line_no}: key outside any section")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if (section, key) not in _CONFIG_SCHEMA:
                raise ConfigError(f"{path}:{line_no}: unknown key {key!r} in [{section}]")
            name, parser = _CONFIG_SCHEMA[(section, key)]
            try:
                values[name] = parser(value)
            except ValueError:
                raise ConfigError(f"{path}:{line_no}: bad value {value!r} for {key}") from None
    try:
        return ExperimentConfig(**values)
    except ConfigError:
        raise
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def config_echo(cfg: ExperimentConfig) -> str:
    parts = [f"{name}={getattr(cfg, name)}" for name in cfg.__dataclass_fields__]
    return "\n".join(parts)


@dataclass
class ContractRow:
    side: str
    style: str
    strike: float
    t0_years: float
    sigma: float
    actual: float


def load_contracts(path) -> list[ContractRow]:
    """Load an option-contract fixture CSV: side,style,strike,t0_years,sigma,actual."""
    expected = ["side", "style", "strike", "t0_years", "sigma", "actual"]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty contracts file") from None
        if [h.strip() for h in header] != expected:
            raise ConfigError(f"{path}: expected header {','.join(expected)}")
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) != 6:
                raise ConfigError(f"{path}: expected 6 columns at row {i}")
            try:
                rows.append(
                    ContractRow(
                        side=row[0].strip(),
                        style=row[1].strip(),
                        strike=float(row[2]),
                        t0_years=float(row[3]),
                        sigma=float(row[4]),
                        actual=float(row[5]),
                    )
                )
            except ValueError:
                raise ConfigError(f"{path}: bad numeric value at row {i}") from None
    if not rows:
        raise ConfigError(f"{path}: no contracts")
    return rows


def mape(predicted, actual) -> float:
    """Mean absolute percentage error, as a percentage."""
    pred = np.asarray(predicted, dtype=float)
    act = np.asarray(actual, dtype=float)
    if pred.shape != act.shape or pred.ndim != 1:
        raise PricingError(f"length mismatch: {pred.shape} vs {act.shape}")
    if pred.shape[0] == 0:
        raise PricingError("empty inputs")
    zero = np.nonzero(act == 0.0)[0]
    if zero.size:
        raise PricingError(f"actual value is zero at index {int(zero[0])}")
    return float(100.0 * np.abs((pred - act) / act).mean())


@dataclass
class EvalReport:
    model: str
    rows: list[tuple[str, float, float, float]]  # (contract_id, predicted, actual, ape)
    mape_percent: float
    runtime_seconds: float
    config_text: str
    train_report: TrainReport | None = None


def gan_config_from(cfg: ExperimentConfig, scale: float, epochs: int | None = None) -> GanConfig:
    return GanConfig(
        T=cfg.T,
        noise_dim=cfg.noise_dim,
        epochs=epochs if epochs is not None else cfg.epochs,
        batch_size=cfg.batch_size,
        lr_generator=cfg.lr_generator,
        lr_discriminator=cfg.lr_discriminator,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        adam_eps=cfg.adam_eps,
        seed=cfg.seed,
        scale=scale,
        delta_loss=cfg.delta_loss,
        eps_std=cfg.eps_std,
        k_epochs=cfg.k_epochs,
    )


@dataclass
class TrainedPipeline:
    model: GanModel
    report: TrainReport
    d: int
    reference: np.ndarray  # last T observed prices
    spot: float
    n_obs: int


def train_gan(cfg: ExperimentConfig, prices: np.ndarray) -> TrainedPipeline:
    """Stride search with a short training probe, then a full training run."""
    prices = np.asarray(prices, dtype=float)
    # 2x headroom keeps scaled prices in the responsive middle of the
    # generator's sigmoid output instead of its saturating tail
    scale = 2.0 * float(prices.max())

    def probe(ws) -> bool:
        probe_cfg = gan_config_from(cfg, scale, epochs=cfg.probe_epochs)
        batch = min(probe_cfg.batch_size, len(ws))
        probe_cfg = replace(probe_cfg, batch_size=batch)
        _, rep = train(ws.windows, probe_cfg)
        return rep.collapsed

    d, ws = search_stride(prices, cfg.T, cfg.n1, probe)
    full_cfg = gan_config_from(cfg, scale)
    full_cfg = replace(full_cfg, batch_size=min(full_cfg.batch_size, len(ws)))
    model, report = train(ws.windows, full_cfg)
    report.d_used = d
    if report.collapsed:
        raise CollapseError(f"training collapsed at stride d={d}: {report.collapse_reason}")
    return TrainedPipeline(
        model=model,
        report=report,
        d=d,
        reference=prices[-cfg.T :],
        spot=float(prices[-1]),
        n_obs=prices.shape[0],
    )


def obtain_model(cfg: ExperimentConfig, prices: np.ndarray) -> TrainedPipeline:
    """Load the configured checkpoint, or train from scratch."""
    if cfg.checkpoint_path:
        model = load_checkpoint(cfg.checkpoint_path)
        if model.T != cfg.T:
            raise ConfigError(
                f"checkpoint window length {model.T} != configured T={cfg.T}"
            )
        prices = np.asarray(prices, dtype=float)
        return TrainedPipeline(
            model=model,
            report=TrainReport(),
            d=0,
            reference=prices[-cfg.T :],
            spot=float(prices[-1]),
            n_obs=prices.shape[0],
        )
    return train_gan(cfg, prices)


def selected_tracks(pipe: TrainedPipeline, cfg: ExperimentConfig) -> np.ndarray:
    """Sample N2 tracks and keep the ones most similar to the last window."""
    tracks = sample(pipe.model, cfg.n2, cfg.seed)
    ranking = rank_and_select(tracks, pipe.reference, cfg.alpha)
    return tracks[ranking.selected]


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:
        raise StageError(name, exc) from exc


def run_pipeline(cfg: ExperimentConfig) -> EvalReport:
    """Price every contract in the fixture with the configured model."""
    started = time.monotonic()
    series = _stage("market_data", load_price_series, cfg.prices_path, cfg.symbol)
    contracts = _stage("market_data", load_contracts, cfg.contracts_path)
    prices = np.asarray(series.prices, dtype=float)
    spot = float(prices[-1])

    if cfg.model == "gan-mc":
        pipe = _stage("gan_core", obtain_model, cfg, prices)
        tracks = _stage("similarity", selected_tracks, pipe, cfg)

    if cfg.model.startswith("lr"):
        split = cfg.lr_train_rows
        if not (0 < split < len(contracts)):
            raise StageError(
                "baselines",
                ConfigError(f"lr_train_rows={split} must split {len(contracts)} contracts"),
            )
        regime = {"lr": "all", "lr-itm": "itm", "lr-otm": "otm"}[cfg.model]
        train_rows = [
            (spot, c.strike, c.t0_years, c.side, c.actual) for c in contracts[:split]
        ]
        pricer = _stage("baselines", fit_linear_pricer, train_rows, regime, "option")
        test = contracts[split:]
    else:
        test = contracts

    rows: list[tuple[str, float, float, float]] = []
    for i, c in enumerate(test):
        contract_id = str(i)
        if cfg.model == "bs":
            predicted = _stage(
                "baselines", bs_price, c.side, spot, c.strike, cfg.r, c.sigma, c.t0_years
            )
        elif cfg.model == "mc":
            predicted = _stage(
                "baselines",
                gbm_mc_option,
                c.side,
                spot,
                c.strike,
                cfg.r,
                c.sigma,
                c.t0_years,
                cfg.n2,
                cfg.seed + i,
                cfg.dt,
                c.style,
            )
        elif cfg.model == "gan-mc":
            contract = OptionContract(
                side=c.side, style=c.style, strike=c.strike, t0_years=c.t0_years,
                underlying=cfg.symbol,
            )
            predicted = _stage(
                "pricing_options", price_option, contract, tracks, cfg.r, cfg.dt
            ).value
        else:
            moneyness_row = (spot, c.strike, c.t0_years, c.side)
            try:
                predicted = lr_price(pricer, moneyness_row)
            except PricingError:
                continue  # outside the fitted regime
        ape = abs(predicted - c.actual) / abs(c.actual) if c.actual else float("inf")
        rows.append((contract_id, float(predicted), c.actual, float(ape)))

    if not rows:
        raise StageError("eval", PricingError("no contracts to evaluate"))
    score = _stage("eval", mape, [r[1] for r in rows], [r[2] for r in rows])
    return EvalReport(
        model=cfg.model,
        rows=rows,
        mape_percent=score,
        runtime_seconds=time.monotonic() - started,
        config_text=config_echo(cfg),
        train_report=None,
    )


def render_report(report: EvalReport) -> str:
    """Deterministic CSV body: per-contract rows plus a trailing MAPE line."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["contract_id", "predicted", "actual", "ape"])
    for contract_id, predicted, actual, ape in report.rows:
        writer.writerow([contract_id, repr(predicted), repr(actual), repr(ape)])
    writer.writerow(["MAPE", repr(report.mape_percent)])
    return buf.getvalue()


def write_report(report: EvalReport, out_path: str) -> None:
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_report(report))
    with open(out_path + ".meta.txt", "w", encoding="utf-8") as fh:
        fh.write(f"version: {__version__}\n")
        fh.write(f"model: {report.model}\n")
        fh.write(f"wall_time_seconds: {report.runtime_seconds:.3f}\n")
        fh.write("config:\n")
        fh.write(report.config_text + "\n")


def generate_tracks_csv(cfg: ExperimentConfig, count: int, out_path: str) -> None:
    """Write `count` of the most market-like generated tracks as plot-ready CSV."""
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    keep = retained_count(cfg.n2, cfg.alpha)
    if count > keep:
        raise ConfigError(f"count {count} exceeds retained set size {keep}")
    series = _stage("market_data", load_price_series, cfg.prices_path, cfg.symbol)
    prices = np.asarray(series.prices, dtype=float)
    pipe = _stage("gan_core", obtain_model, cfg, prices)
    tracks = sample(pipe.model, cfg.n2, cfg.seed)
    ranking = rank_and_select(tracks, pipe.reference, cfg.alpha)
    chosen = ranking.order[-count:]  # the most similar tracks
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["track_id", "day_offset", "price"])
        for track_id, idx in enumerate(chosen):
            for day, price in enumerate(tracks[idx], start=1):
                writer.writerow([track_id, day, repr(float(price))])


def price_equity_futures_pipeline(cfg: ExperimentConfig, t0_years: float) -> float:
    """End-to-end equity futures price: train/sample/filter plus dividend fit."""
    series = _stage("market_data", load_price_series, cfg.prices_path, cfg.symbol)
    if not cfg.dividends_path:
        raise ConfigError("equity futures pricing needs [data] dividends")
    dividends = _stage("market_data", load_dividends, cfg.dividends_path, cfg.symbol)
    prices = np.asarray(series.prices, dtype=float)
    pipe = _stage("gan_core", obtain_model, cfg, prices)
    tracks = _stage("similarity", selected_tracks, pipe, cfg)
    fit = _stage("pricing_futures", fit_dividends, dividends)
    k = payoff_index(t0_years, cfg.dt, cfg.T)
    forecast = predict_dividend(fit, (pipe.n_obs - 1) + k)
    return _stage(
        "pricing_futures",
        price_equity_futures,
        pipe.spot,
        tracks,
        forecast,
        cfg.r,
        t0_years,
        cfg.dt,
    )


def price_commodity_pipeline(cfg: ExperimentConfig, t0_years: float) -> float:
    """End-to-end commodity forward/futures price with empirical carry."""
    series = _stage("market_data", load_price_series, cfg.prices_path, cfg.symbol)
    if not cfg.quotes_path:
        raise ConfigError("commodity pricing needs [data] quotes")
    quotes = _stage(
        "market_data", load_quotes, cfg.quotes_path, cfg.quote_id or cfg.symbol
    )
    prices = np.asarray(series.prices, dtype=float)
    pipe = _stage("gan_core", obtain_model, cfg, prices)
    tracks = _stage("similarity", selected_tracks, pipe, cfg)
    carry = _stage("pricing_futures", estimate_carry, quotes, cfg.r, t0_years, cfg.n3)
    return _stage(
        "pricing_futures", price_commodity, tracks, carry, cfg.r, t0_years, cfg.dt
    )


def price_option_pipeline(cfg: ExperimentConfig, contract: OptionContract) -> float:
    """End-to-end option price from the configured price history."""
    series = _stage("market_data", load_price_series, cfg.prices_path, cfg.symbol)
    prices = np.asarray(series.prices, dtype=float)
    pipe = _stage("gan_core", obtain_model, cfg, prices)
    tracks = _stage("similarity", selected_tracks, pipe, cfg)
    return _stage("pricing_options", price_option, contract, tracks, cfg.r, cfg.dt).value
