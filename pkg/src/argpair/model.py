"""Full matching model and its ablation variants."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import argrep, context, layers, match
from .argrep import ArgRepConfig, LatentState, Reconstruction
from .context import ContextConfig
from .corpus.instances import EncodedInstance
from .corpus.vocab import Vocabulary
from .diffcore import ParameterStore, Tensor, ops
from .match import MatchConfig, RankedCandidates

# variant -> (argument representation, context encoder)
VARIANTS = {
    "match_rnn": ("rnn", None),
    "match_rnn_Cb": ("rnn", "flat"),
    "match_rnn_Ch": ("rnn", "hier"),
    "match_ae_Ch": ("ae", "hier"),
    "match_vae_Ch": ("vae", "hier"),
    "full": ("dvae", "hier"),
}


@dataclass
class ModelConfig:
    argrep: ArgRepConfig = field(default_factory=ArgRepConfig)
    context: ContextConfig = field(default_factory=ContextConfig)
    match: MatchConfig = field(default_factory=MatchConfig)
    variant: str = "full"
    kl_mode: str = "batch"

    @property
    def representation(self) -> str:
        return VARIANTS[self.variant][0]

    @property
    def context_kind(self) -> Optional[str]:
        return VARIANTS[self.variant][1]

    @property
    def rep_dim(self) -> int:
        return self.argrep.enc_dim if self.representation == "rnn" else self.argrep.dec_hidden

    @property
    def score_input_dim(self) -> int:
        ctx = 2 * self.context.out_dim if self.context_kind else 0
        return 4 * self.rep_dim + ctx + self.argrep.enc_dim

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; valid: {', '.join(VARIANTS)}")
        if self.kl_mode not in ("batch", "example"):
            raise ValueError(f"kl_mode must be 'batch' or 'example', got {self.kl_mode!r}")
        self.argrep.validate()
        self.context.validate()
        self.match.validate()
        if self.rep_dim != self.argrep.enc_dim:
            raise ValueError(
                f"quotation-guided attention needs representation size {self.rep_dim} to equal "
                f"the BiGRU state size {self.argrep.enc_dim} (dec_hidden = 2 * enc_hidden)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(ArgRepConfig(**d.get("argrep", {})), ContextConfig(**d.get("context", {})),
                   MatchConfig(**d.get("match", {})), d.get("variant", "full"),
                   d.get("kl_mode", "batch"))


@dataclass
class ForwardResult:
    scores: Tensor                # (B, 1 + u)
    recon: Optional[Reconstruction]
    kl: Optional[Tensor]
    latent: Optional[LatentState]
    instance_ids: list[str]


def _kl_uniform(q: Tensor) -> Tensor:
    # sum_k q log(qK) with 0 log 0 = 0; zero entries read log of 1 instead of -inf
    K = q.shape[-1]
    safe = ops.where(q.data > 0, q, 1.0)
    return ops.sum(q * ops.log(safe * float(K)), axis=-1)


def batch_kl(posteriors: Tensor) -> Tensor:
    """Mean over latents of KL(batch-mean posterior || uniform); ``posteriors`` (N, M, K)."""
    return ops.mean(_kl_uniform(ops.mean(posteriors, axis=0)))


def example_kl(posteriors: Tensor) -> Tensor:
    """Mean over arguments and latents of KL(q(z_i|x) || uniform)."""
    return ops.mean(_kl_uniform(posteriors))


def gaussian_kl(mu: Tensor, logvar: Tensor) -> Tensor:
    """Mean over arguments and dimensions of KL(N(mu, exp(logvar)) || N(0, 1))."""
    return ops.mean((mu * mu + ops.exp(logvar) - logvar - 1.0) * 0.5)


class Model:
    """Parameters plus the wiring selected by ``config.variant``."""

    def __init__(self, config: ModelConfig, vocab_size: int, seed: int = 0, dtype=np.float64,
                 pretrained: Optional[dict] = None, vocab: Optional[Vocabulary] = None):
        config.validate()
        self.config = config
        self.vocab_size = vocab_size
        self.store = ParameterStore(dtype)
        rng = np.random.default_rng(seed)
        ac = config.argrep
        rep = config.representation
        argrep.init_embeddings(self.store, vocab_size, ac.word_dim, rng, pretrained, vocab)
        argrep.init_params(self.store, ac, vocab_size, rng, decoder=rep != "rnn",
                           latents=rep == "dvae")
        if rep == "ae":
            layers.add_linear(self.store, "ae.bottleneck", ac.enc_dim, ac.dec_hidden, rng)
        elif rep == "vae":
            z = ac.M * ac.K
            layers.add_linear(self.store, "vae.mu", ac.enc_dim, z, rng)
            layers.add_linear(self.store, "vae.logvar", ac.enc_dim, z, rng)
            layers.add_linear(self.store, "vae.out", z, ac.dec_hidden, rng)
        if config.context_kind == "hier":
            context.init_params(self.store, config.context, ac.word_dim, rng)
        elif config.context_kind == "flat":
            context.init_flat_params(self.store, config.context, ac.word_dim, rng)
        match.init_params(self.store, config.match, config.score_input_dim, rng)

    @property
    def dtype(self):
        return self.store.dtype

    @property
    def has_decoder(self) -> bool:
        return self.config.representation != "rnn"

    # -- components -------------------------------------------------------

    def represent(self, enc: argrep.EncodedBatch, train: bool, gumbel_rng, need_decoder: bool):
        """(R, decoder initial state or None, KL or None, LatentState or None)."""
        rep = self.config.representation
        st = self.store
        if rep == "rnn":
            return enc.final, None, None, None
        if rep == "ae":
            r = ops.tanh(layers.linear(st, "ae.bottleneck", enc.final))
            return r, r, Tensor(np.zeros((), dtype=self.dtype)), None
        if rep == "vae":
            mu = layers.linear(st, "vae.mu", enc.final)
            logvar = layers.linear(st, "vae.logvar", enc.final)
            r = layers.linear(st, "vae.out", mu)
            h0 = None
            if need_decoder:
                z = mu
                if train:
                    eps = Tensor(gumbel_rng.standard_normal(mu.shape).astype(self.dtype))
                    z = mu + ops.exp(logvar * 0.5) * eps
                h0 = layers.linear(st, "vae.out", z)
            return r, h0, gaussian_kl(mu, logvar), None
        lat = argrep.latent_posteriors(st, enc.final)
        r = argrep.discrete_representation(st, lat.posteriors)
        h0 = None
        if need_decoder:
            if train:
                lat.samples = argrep.gumbel_relax(lat.logits, self.config.argrep.tau, gumbel_rng)
            else:
                lat.samples = lat.posteriors
            h0 = argrep.decoder_init(st, lat.samples)
        kl_fn = batch_kl if self.config.kl_mode == "batch" else example_kl
        return r, h0, kl_fn(lat.posteriors), lat

    def contexts(self, posts: Sequence[Sequence[np.ndarray]]) -> Optional[Tensor]:
        kind = self.config.context_kind
        if kind == "hier":
            return context.context_encode(self.store, self.config.context, posts, self.dtype)
        if kind == "flat":
            return context.flat_context_encode(self.store, self.config.context, posts, self.dtype)
        return None

    # -- full pass --------------------------------------------------------

    def forward(self, batch: Sequence[EncodedInstance], train: bool = False,
                seed: Optional[int] = None, reconstruct: Optional[bool] = None,
                score: bool = True) -> ForwardResult:
        """Score every candidate of every instance; optionally the DVAE terms.

        ``seed`` drives Gumbel noise and dropout (separate streams) in training.
        Reconstruction defaults to on in training for variants with a decoder.
        """
        if reconstruct is None:
            reconstruct = train and self.has_decoder
        reconstruct = reconstruct and self.has_decoder
        gumbel_rng = np.random.default_rng([0 if seed is None else seed, 1])
        drop_rng = np.random.default_rng([0 if seed is None else seed, 2]) if train else None
        n_cand = [len(inst.candidates) for inst in batch]
        seqs, q_rows, c_rows = [], [], []
        for inst in batch:
            q_rows.append(len(seqs))
            seqs.append(inst.quotation)
            c_rows.append(list(range(len(seqs), len(seqs) + len(inst.candidates))))
            seqs.extend(inst.candidates)
        ids, mask = argrep.pad_batch(seqs)
        enc = argrep.encode(self.store, ids, mask)
        R, h0, kl, lat = self.represent(enc, train, gumbel_rng, reconstruct)
        recon = argrep.reconstruction_loss(self.store, ids, mask, h0) if reconstruct else None
        if not score:
            return ForwardResult(None, recon, kl, lat, [inst.id for inst in batch])

        qi = np.array([q_rows[b] for b, inst in enumerate(batch) for _ in inst.candidates])
        ri = np.array([r for rows in c_rows for r in rows])
        rq, rr = R[qi], R[ri]
        feats = match.match_features(rq, rr, enc.states[ri], mask[ri])
        blocks = [rq, rr]
        if self.config.context_kind:
            posts = []
            for inst in batch:
                posts.append(inst.quotation_context)
                posts.extend(inst.reply_contexts)
            C = self.contexts(posts)
            ctx_q = np.array([q_rows[b] for b, inst in enumerate(batch) for _ in inst.candidates])
            blocks += [C[ctx_q], C[ri]]
        blocks += [feats.f_p, feats.f_d, feats.f_r]
        s = match.score(self.store, blocks, self.config.match.dropout if train else 0.0, drop_rng)
        if len(set(n_cand)) != 1:
            raise ValueError("all instances in a batch need the same number of candidates")
        scores = ops.reshape(s, (len(batch), n_cand[0]))
        return ForwardResult(scores, recon, kl, lat, [inst.id for inst in batch])

    def autoencode(self, seqs: Sequence[np.ndarray], train: bool = True,
                   seed: Optional[int] = None) -> tuple[Reconstruction, Tensor, Optional[LatentState]]:
        """Reconstruction, KL and latent state for bare argument sequences."""
        if not self.has_decoder:
            raise ValueError(f"variant {self.config.variant!r} has no decoder")
        gumbel_rng = np.random.default_rng([0 if seed is None else seed, 1])
        ids, mask = argrep.pad_batch(seqs)
        enc = argrep.encode(self.store, ids, mask)
        _, h0, kl, lat = self.represent(enc, train, gumbel_rng, True)
        return argrep.reconstruction_loss(self.store, ids, mask, h0), kl, lat

    def rank(self, instances: Sequence[EncodedInstance], batch_size: int = 64) -> list[RankedCandidates]:
        out = []
        for start in range(0, len(instances), batch_size):
            chunk = instances[start:start + batch_size]
            res = self.forward(chunk, train=False)
            for inst, row in zip(chunk, res.scores.data):
                out.append(match.rank_scores(inst.id, row, inst.positive_index))
        return out

    def latent_codes(self, seqs: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
        """(codes (N, M), posteriors (N, M, K)) for the DVAE variant."""
        if self.config.representation != "dvae":
            raise ValueError("discrete codes exist only for the full model")
        ids, mask = argrep.pad_batch(seqs)
        enc = argrep.encode(self.store, ids, mask)
        lat = argrep.latent_posteriors(self.store, enc.final)
        return lat.codes, lat.posteriors.data
