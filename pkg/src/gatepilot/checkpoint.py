"""Versioned binary checkpoints for network and optimizer state.

Layout, all little-endian:

    magic "GPCK" | version u8 | flags u8 | env_steps u64 | updates u64
    | config_hash u32 | n_networks u16
    per network: role (u8 length + ascii) | n_layers u16
                 | per layer: rows u32, cols u32, activation u8
    payload: per network in header order, per layer: weights row-major
             float64, then biases; if flags bit 0, optimizer moments
             follow (per role: t u64, then m and v mirroring the layers)
    trailer: crc32 u32 over the payload bytes

Files are self-describing and platform-independent; a round trip
restores every float bit-exactly.
"""

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import netcore

MAGIC = b"GPCK"
VERSION = 1
_FLAG_ADAM = 1

_ACT_CODES = {"relu": 0, "tanh": 1, "linear": 2}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}

# roles that carry optimizer moments when present
ADAM_ROLES = ("actor", "critic1", "critic2")


class CheckpointError(Exception):
    """Base for anything wrong with a checkpoint file."""


class MagicError(CheckpointError):
    """File does not start with the checkpoint magic."""


class VersionError(CheckpointError):
    """Format version not supported by this reader."""


class HeaderError(CheckpointError):
    """Header is malformed or cut short."""


class ChecksumError(CheckpointError):
    """Payload truncated or corrupted."""


@dataclass
class CheckpointData:
    version: int
    env_steps: int
    updates: int
    config_hash: int
    nets: dict
    adam: dict = field(default_factory=dict)


def save_checkpoint(path, nets, env_steps=0, updates=0, config_hash=0, adam=None):
    """Write networks (role -> Mlp) and optional Adam states to ``path``.

    Roles are serialized in sorted order so equal content always yields
    equal bytes regardless of dict construction order.
    """
    roles = sorted(nets)
    flags = _FLAG_ADAM if adam else 0
    if adam:
        # the reader infers moment layout from the header, so moments must
        # cover exactly the optimizer-eligible roles present in the file
        expected = {r for r in roles if r in ADAM_ROLES}
        if set(adam) != expected:
            raise ValueError(f"adam roles {sorted(adam)} != expected {sorted(expected)}")
    head = [MAGIC, struct.pack("<BBQQIH", VERSION, flags, env_steps, updates,
                               config_hash & 0xFFFFFFFF, len(roles))]
    payload = []
    for role in roles:
        net = nets[role]
        tag = role.encode("ascii")
        head.append(struct.pack("<B", len(tag)))
        head.append(tag)
        head.append(struct.pack("<H", len(net.layers)))
        for layer in net.layers:
            rows, cols = layer.w.shape
            head.append(struct.pack("<IIB", rows, cols, _ACT_CODES[layer.act]))
            payload.append(layer.w.astype("<f8").tobytes())
            payload.append(layer.b.astype("<f8").tobytes())
    if adam:
        for role in sorted(adam):
            if role not in nets:
                raise ValueError(f"optimizer state for unknown role {role!r}")
            st = adam[role]
            payload.append(struct.pack("<Q", st.t))
            for pair in (st.m, st.v):
                for mw, mb in pair:
                    payload.append(mw.astype("<f8").tobytes())
                    payload.append(mb.astype("<f8").tobytes())
    body = b"".join(payload)
    with open(path, "wb") as f:
        f.write(b"".join(head))
        f.write(body)
        f.write(struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF))


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.off = 0

    def take(self, fmt):
        try:
            vals = struct.unpack_from(fmt, self.buf, self.off)
        except struct.error as e:
            raise HeaderError(f"checkpoint header cut short: {e}") from None
        self.off += struct.calcsize(fmt)
        return vals

    def raw(self, n):
        if self.off + n > len(self.buf):
            raise HeaderError("checkpoint header cut short")
        out = self.buf[self.off:self.off + n]
        self.off += n
        return out


def load_checkpoint(path):
    """Read a checkpoint back; raises a named error on any corruption."""
    with open(path, "rb") as f:
        buf = f.read()
    r = _Reader(buf)
    if r.raw(4) != MAGIC:
        raise MagicError(f"{path}: not a checkpoint file")
    version, flags, env_steps, updates, cfg_hash, n_nets = r.take("<BBQQIH")
    if version != VERSION:
        raise VersionError(f"{path}: format version {version}, expected {VERSION}")

    specs = []  # (role, [(rows, cols, act), ...])
    for _ in range(n_nets):
        (tag_len,) = r.take("<B")
        role = r.raw(tag_len).decode("ascii")
        (n_layers,) = r.take("<H")
        dims = []
        for _ in range(n_layers):
            rows, cols, act = r.take("<IIB")
            if act not in _ACT_NAMES:
                raise HeaderError(f"{path}: unknown activation code {act}")
            dims.append((rows, cols, _ACT_NAMES[act]))
        specs.append((role, dims))

    n_params = sum(rows * cols + rows for _, dims in specs for rows, cols, _ in dims)
    n_floats = n_params
    if flags & _FLAG_ADAM:
        adam_roles = sorted(role for role, _ in specs if role in ADAM_ROLES)
        adam_param_counts = {
            role: sum(rows * cols + rows for rows, cols, _ in dims)
            for role, dims in specs
        }
        n_floats += 2 * sum(adam_param_counts[role] for role in adam_roles)
        adam_bytes = 8 * len(adam_roles)
    else:
        adam_roles = []
        adam_bytes = 0
    body_len = 8 * n_floats + adam_bytes
    if len(buf) < r.off + body_len + 4:
        raise ChecksumError(f"{path}: file truncated")
    body = buf[r.off:r.off + body_len]
    (stored_crc,) = struct.unpack_from("<I", buf, r.off + body_len)
    if zlib.crc32(body) & 0xFFFFFFFF != stored_crc:
        raise ChecksumError(f"{path}: payload checksum mismatch")

    pr = _Reader(body)

    def read_array(shape):
        n = int(np.prod(shape))
        arr = np.frombuffer(pr.raw(8 * n), dtype="<f8").astype(float, copy=True)
        return arr.reshape(shape)

    nets = {}
    for role, dims in specs:
        layers = [netcore.Layer(read_array((rows, cols)), read_array((rows,)), act)
                  for rows, cols, act in dims]
        nets[role] = netcore.Mlp(layers)

    adam = {}
    for role in adam_roles:
        net = nets[role]
        st = netcore.AdamState(net)
        (st.t,) = struct.unpack_from("<Q", pr.raw(8))
        for pair in (st.m, st.v):
            for i, layer in enumerate(net.layers):
                pair[i] = (read_array(layer.w.shape), read_array(layer.b.shape))
        adam[role] = st

    return CheckpointData(version, env_steps, updates, cfg_hash, nets, adam)


def save_trainer(path, trainer, config_hash=0):
    """Checkpoint every network and optimizer of a Trainer."""
    nets = {
        "actor": trainer.actor,
        "critic1": trainer.critic1,
        "critic2": trainer.critic2,
        "target_actor": trainer.target_actor,
        "target_critic1": trainer.target_critic1,
        "target_critic2": trainer.target_critic2,
    }
    adam = {
        "actor": trainer.adam_actor,
        "critic1": trainer.adam_critic1,
        "critic2": trainer.adam_critic2,
    }
    save_checkpoint(path, nets, env_steps=trainer.env_steps,
                    updates=trainer.updates, config_hash=config_hash, adam=adam)
