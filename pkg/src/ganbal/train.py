"""Training loop: alternating patch-GAN updates plus scheduler-driven extra batches."""
import csv
import io
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from ._backend import backend_name
from .data import epoch_length, load_batch, load_split
from .fid import FeatureExtractorSpec, extract_features, frechet_distance, gaussian_stats
from .losses import LossConfig, gen_total_loss, patch_disc_loss
from .models import (DiscriminatorConfig, GeneratorConfig, architecture_document, build_models,
                     discriminator_forward, generator_forward)
from .nn import Adam, backward, load_params, save_params
from .scheduler import NONE, AdaptiveScheduler, LossHistory, SchedulerConfig

log = logging.getLogger(__name__)

METRICS_VERSION = "ganbal-metrics v1"
COLUMNS = ["epoch", "loss_d", "loss_g", "loss_g_adv", "loss_g_l1", "acc_d", "rps_g", "rps_d",
           "delta", "target", "extra_batches", "steps_d", "steps_g", "fid", "wall_ms", "status"]
MODES = ("baseline", "adaptive")


class TrainingAborted(RuntimeError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 8
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    mode: str = "adaptive"
    fid_every: int = 2
    eval_samples: int = 20
    val_fraction: float = 0.1
    model_seed: int = 0
    data_seed: int = 0
    degrade_seed: int = 0
    fid_seed: int = 0
    fid_extractor: str = "proxy"
    precision: str = "float32"
    record_timing: bool = True
    loss: LossConfig = field(default_factory=LossConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)

    def validate(self):
        if self.epochs < 1 or self.batch_size < 1 or self.fid_every < 1:
            raise ValueError("epochs, batch_size and fid_every must all be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.precision not in ("float32", "float64"):
            raise ValueError(f"precision must be float32 or float64, got {self.precision!r}")
        if self.eval_samples < 2:
            raise ValueError("eval_samples must be >= 2")
        if self.mode == "baseline":
            self.scheduler.enabled = False
        self.loss.validate()
        self.scheduler.validate()
        self.generator.validate()
        self.discriminator.validate()
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        nested = {"loss": LossConfig, "scheduler": SchedulerConfig,
                  "generator": GeneratorConfig, "discriminator": DiscriminatorConfig}
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        for k, v in d.items():
            if k in nested:
                sub_known = {f.name for f in fields(nested[k])}
                bad = set(v) - sub_known
                if bad:
                    raise ValueError(f"unknown keys in {k!r}: {sorted(bad)}")
                kw[k] = nested[k](**v)
            else:
                kw[k] = v
        return cls(**kw)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


# ---------------------------------------------------------------- metrics file

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_metrics(path, rows):
    buf = io.StringIO()
    buf.write(f"# {METRICS_VERSION}\n")
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k)) for k in COLUMNS})
    tmp = os.fspath(path) + ".tmp"
    with open(tmp, "w", newline="") as f:
        f.write(buf.getvalue())
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def read_metrics(path):
    """Rows of metrics.csv with numeric fields parsed (blank -> None)."""
    with open(path, newline="") as f:
        lines = [ln for ln in f if not ln.startswith("#")]
    rows = []
    for r in csv.DictReader(lines):
        out = {}
        for k, v in r.items():
            if k in ("target", "status"):
                out[k] = v
            elif v == "" or v is None:
                out[k] = None
            elif k in ("epoch", "extra_batches", "steps_d", "steps_g"):
                out[k] = int(v)
            else:
                out[k] = float(v)
        rows.append(out)
    return rows


# ---------------------------------------------------------------- steps

class Trainer:
    def __init__(self, cfg, manifest):
        self.cfg = cfg.validate()
        self.manifest = manifest
        if manifest.image_size != cfg.generator.input_size:
            raise ValueError(f"dataset images are {manifest.image_size}px but the generator "
                             f"expects {cfg.generator.input_size}px")
        self.dtype = np.dtype(cfg.precision)
        self.gparams, self.dparams = build_models(cfg.generator, cfg.discriminator,
                                                  cfg.model_seed, self.dtype)
        self.opt_g = Adam(self.gparams, cfg.lr, cfg.beta1, cfg.beta2)
        self.opt_d = Adam(self.dparams, cfg.lr, cfg.beta1, cfg.beta2)
        self.fid_spec = FeatureExtractorSpec(cfg.fid_extractor, cfg.fid_seed)
        self._val = None
        self._real_stats = None

    def generate(self, x):
        return generator_forward(x, self.gparams, self.cfg.generator)

    def d_step(self, batch):
        cfg = self.cfg
        fake = self.generate(batch.x).detach()
        real_map = discriminator_forward(batch.x, batch.y, self.dparams, cfg.discriminator)
        fake_map = discriminator_forward(batch.x, fake, self.dparams, cfg.discriminator)
        loss = patch_disc_loss(real_map, fake_map, cfg.loss.delta)
        val = float(loss.data)
        if not math.isfinite(val):
            raise TrainingAborted(f"non-finite discriminator loss {val}")
        backward(loss, self.dparams)
        self.opt_d.step()
        acc = 0.5 * (float(np.mean(real_map.data > 0.5)) + float(np.mean(fake_map.data < 0.5)))
        return val, acc

    def g_step(self, batch):
        cfg = self.cfg
        fake = self.generate(batch.x)
        fake_map = discriminator_forward(batch.x, fake, self.dparams, cfg.discriminator)
        total, adv, l1 = gen_total_loss(fake_map, fake, batch.y, cfg.loss)
        vals = float(total.data), float(adv.data), float(l1.data)
        if not all(math.isfinite(v) for v in vals):
            raise TrainingAborted(f"non-finite generator loss {vals}")
        backward(total, self.gparams)
        self.opt_g.step()
        return vals

    # ------------------------------------------------------------ evaluation

    def val_data(self):
        if self._val is None:
            self._val = load_split(self.manifest, "val", self.cfg.eval_samples)
        return self._val

    def evaluate(self, batch_size=32):
        x, y = self.val_data()
        if len(x) < 2:
            raise ValueError("validation split needs at least 2 pairs for FID")
        outs = []
        for i in range(0, len(x), batch_size):
            outs.append(self.generate(x[i : i + batch_size].astype(self.dtype)).data)
        fake = np.concatenate(outs).astype(np.float64)
        if self._real_stats is None:
            self._real_stats = gaussian_stats(extract_features(y, self.fid_spec))
        fid = frechet_distance(self._real_stats, gaussian_stats(extract_features(fake, self.fid_spec)))
        per_image = np.abs(fake - y).reshape(len(y), -1).mean(axis=1) / 2.0
        return {"fid": fid, "l1_mean": float(per_image.mean()),
                "l1_median": float(np.median(per_image)), "l1_max": float(per_image.max()),
                "n": int(len(y))}


def _acquire_lock(run_dir):
    path = os.path.join(run_dir, ".lock")
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(f"run directory {run_dir} is locked by another trainer ({path})") from None
    os.write(fd, str(os.getpid()).encode())
    os.close(fd)
    return path


def train(cfg, manifest, run_dir, initial_histories=None, use_scheduler=True, overwrite=False):
    """Train one run into ``run_dir``; returns the list of metric rows.

    ``initial_histories`` optionally seeds the generator and discriminator
    loss histories. Their decision is then applied in epoch 1.
    """
    cfg.validate()
    os.makedirs(run_dir, exist_ok=True)
    metrics_path = os.path.join(run_dir, "metrics.csv")
    if os.path.exists(metrics_path) and not overwrite:
        raise FileExistsError(f"{metrics_path} already exists")
    lock = _acquire_lock(run_dir)
    try:
        return _train(cfg, manifest, run_dir, metrics_path, initial_histories, use_scheduler)
    finally:
        os.remove(lock)


def _train(cfg, manifest, run_dir, metrics_path, initial_histories, use_scheduler):
    tr = Trainer(cfg, manifest)
    ckpt_dir = os.path.join(run_dir, "checkpoints")
    os.makedirs(ckpt_dir, exist_ok=True)
    arch = architecture_document(cfg.generator, cfg.discriminator, tr.gparams, tr.dparams)
    with open(os.path.join(run_dir, "config.json"), "w") as f:
        json.dump({**cfg.to_dict(), "backend": backend_name(), "version": __version__}, f,
                  indent=2)
    with open(os.path.join(run_dir, "architecture.json"), "w") as f:
        json.dump(arch, f, indent=2)

    sched = None
    pending_target, pending_extra = NONE, 0
    if use_scheduler:
        hg, hd = initial_histories or (None, None)
        sched = AdaptiveScheduler(cfg.scheduler, hg, hd)
        dec = sched.current_decision()
        pending_target, pending_extra = dec.target, dec.extra_batches

    n_train = len(manifest.split("train"))
    if n_train == 0:
        raise ValueError("training split is empty")
    m = cfg.batch_size
    nb = epoch_length(n_train, m)
    rows = []
    best_fid = math.inf
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        steps_d = steps_g = 0
        ld, lg, la, ll, acc = [], [], [], [], []
        try:
            # extra batches for the network the previous decision picked; its adversary is frozen
            for k in range(pending_extra):
                batch = load_batch(manifest, "train", k % nb, m, epoch, tr.dtype)
                if pending_target == "generator":
                    tr.g_step(batch)
                    steps_g += 1
                else:
                    tr.d_step(batch)
                    steps_d += 1
            for b in range(nb):
                batch = load_batch(manifest, "train", b, m, epoch, tr.dtype)
                d_loss, d_acc = tr.d_step(batch)
                steps_d += 1
                g_tot, g_adv, g_l1 = tr.g_step(batch)
                steps_g += 1
                ld.append(d_loss)
                acc.append(d_acc)
                lg.append(g_tot)
                la.append(g_adv)
                ll.append(g_l1)
        except TrainingAborted as e:
            rows.append({"epoch": epoch, "status": "aborted", "target": NONE,
                         "extra_batches": 0, "steps_d": steps_d, "steps_g": steps_g})
            write_metrics(metrics_path, rows)
            raise TrainingAborted(f"epoch {epoch}: {e}") from None

        row = {"epoch": epoch, "loss_d": float(np.mean(ld)), "loss_g": float(np.mean(lg)),
               "loss_g_adv": float(np.mean(la)), "loss_g_l1": float(np.mean(ll)),
               "acc_d": float(np.mean(acc)), "steps_d": steps_d, "steps_g": steps_g,
               "target": NONE, "extra_batches": 0, "status": "ok"}
        if sched is not None:
            dec = sched.step(row["loss_g"], row["loss_d"])
            row.update(rps_g=dec.rps_g, rps_d=dec.rps_d, delta=dec.delta, target=dec.target,
                       extra_batches=dec.extra_batches)
            pending_target, pending_extra = dec.target, dec.extra_batches
        if epoch % cfg.fid_every == 0 or epoch == cfg.epochs:
            row["fid"] = tr.evaluate()["fid"]
            if row["fid"] < best_fid:
                best_fid = row["fid"]
                save_params(os.path.join(ckpt_dir, "generator_best.gbck"), tr.gparams)
        if cfg.record_timing:
            row["wall_ms"] = round((time.perf_counter() - t0) * 1000.0, 1)
        rows.append(row)
        write_metrics(metrics_path, rows)
        log.info("epoch %d  D %.4f  G %.4f  rps_g %s rps_d %s  %s+%d  fid %s", epoch,
                 row["loss_d"], row["loss_g"], _fmt(row.get("rps_g")), _fmt(row.get("rps_d")),
                 row["target"], row["extra_batches"], _fmt(row.get("fid")))

    save_params(os.path.join(ckpt_dir, "generator_final.gbck"), tr.gparams)
    save_params(os.path.join(ckpt_dir, "discriminator_final.gbck"), tr.dparams)
    return rows


def evaluate(checkpoint, manifest, fid_spec=None, cfg=None, run_dir=None):
    """Score a saved generator on the validation split: proxy FID and per-image L1 ([0, 1] units)."""
    if not os.path.exists(checkpoint):
        raise FileNotFoundError(f"checkpoint {checkpoint} not found")
    if cfg is None:
        if run_dir is None:
            run_dir = os.path.dirname(os.path.dirname(os.path.abspath(checkpoint)))
        cfg = TrainConfig.load_run(run_dir)
    tr = Trainer(cfg, manifest)
    load_params(checkpoint, tr.gparams)
    if fid_spec is not None:
        tr.fid_spec = fid_spec
    return tr.evaluate()


def _load_run_config(run_dir):
    with open(os.path.join(run_dir, "config.json")) as f:
        d = json.load(f)
    d.pop("backend", None)
    d.pop("version", None)
    return TrainConfig.from_dict(d)


TrainConfig.load_run = staticmethod(_load_run_config)


def seeded_histories(g_losses, d_losses):
    return LossHistory.from_series(g_losses), LossHistory.from_series(d_losses)
