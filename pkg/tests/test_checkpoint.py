"""Binary checkpoint format: round trips, determinism, corruption handling."""

import numpy as np
import pytest

from gatepilot import checkpoint, gateworld, netcore, td3core


def _nets(seed=0):
    rng = np.random.default_rng(seed)
    return {
        "actor": netcore.init_actor(rng),
        "critic1": netcore.init_critic(rng),
    }


def test_round_trip_bit_identical(tmp_path):
    path = tmp_path / "ck.bin"
    nets = _nets()
    checkpoint.save_checkpoint(path, nets, env_steps=123, updates=45,
                               config_hash=0xDEADBEEF)
    data = checkpoint.load_checkpoint(path)
    assert data.version == checkpoint.VERSION
    assert data.env_steps == 123 and data.updates == 45
    assert data.config_hash == 0xDEADBEEF
    assert set(data.nets) == {"actor", "critic1"}
    for role, net in nets.items():
        for l0, l1 in zip(net.layers, data.nets[role].layers):
            assert np.array_equal(l0.w, l1.w)
            assert np.array_equal(l0.b, l1.b)
            assert l0.act == l1.act


def test_adam_moments_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    nets = {"actor": netcore.init_actor(rng)}
    st = netcore.AdamState(nets["actor"])
    st.t = 17
    rng2 = np.random.default_rng(2)
    st.m = [(rng2.normal(size=mw.shape), rng2.normal(size=mb.shape))
            for mw, mb in st.m]
    st.v = [(rng2.random(vw.shape), rng2.random(vb.shape)) for vw, vb in st.v]
    path = tmp_path / "ck.bin"
    checkpoint.save_checkpoint(path, nets, adam={"actor": st})
    data = checkpoint.load_checkpoint(path)
    got = data.adam["actor"]
    assert got.t == 17
    for (a, b), (c, d) in zip(st.m, got.m):
        assert np.array_equal(a, c) and np.array_equal(b, d)
    for (a, b), (c, d) in zip(st.v, got.v):
        assert np.array_equal(a, c) and np.array_equal(b, d)


def test_partial_adam_dict_is_rejected(tmp_path):
    nets = _nets(11)  # actor + critic1, both optimizer-eligible
    st = netcore.AdamState(nets["actor"])
    with pytest.raises(ValueError):
        checkpoint.save_checkpoint(tmp_path / "ck.bin", nets, adam={"actor": st})


def test_equal_content_gives_equal_bytes(tmp_path):
    rng1 = np.random.default_rng(3)
    a = {"actor": netcore.init_actor(rng1), "critic1": netcore.init_critic(rng1)}
    rng2 = np.random.default_rng(3)
    actor2 = netcore.init_actor(rng2)
    b = {"critic1": netcore.init_critic(rng2), "actor": actor2}  # reversed order
    p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
    checkpoint.save_checkpoint(p1, a)
    checkpoint.save_checkpoint(p2, b)
    assert p1.read_bytes() == p2.read_bytes()


def test_payload_sizes_match_dimension_arithmetic(tmp_path):
    nets = _nets(4)
    assert netcore.num_params(nets["actor"]) == 125_104
    assert netcore.num_params(nets["critic1"]) == 125_801
    path = tmp_path / "ck.bin"
    checkpoint.save_checkpoint(path, {"actor": nets["actor"]})
    blob = path.read_bytes()
    header = 4 + 24 + (1 + 5) + 2 + 3 * 9  # magic, fixed fields, tag, layers
    assert len(blob) == header + 8 * 125_104 + 4


def test_bad_magic(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(checkpoint.MagicError):
        checkpoint.load_checkpoint(path)


def test_bad_version(tmp_path):
    path = tmp_path / "ck.bin"
    checkpoint.save_checkpoint(path, _nets(5))
    blob = bytearray(path.read_bytes())
    blob[4] = 99
    path.write_bytes(bytes(blob))
    with pytest.raises(checkpoint.VersionError):
        checkpoint.load_checkpoint(path)


def test_truncated_payload_is_checksum_error(tmp_path):
    path = tmp_path / "ck.bin"
    checkpoint.save_checkpoint(path, _nets(6))
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(checkpoint.ChecksumError):
        checkpoint.load_checkpoint(path)


def test_flipped_payload_byte_is_checksum_error(tmp_path):
    path = tmp_path / "ck.bin"
    checkpoint.save_checkpoint(path, _nets(7))
    blob = bytearray(path.read_bytes())
    blob[-100] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(checkpoint.ChecksumError):
        checkpoint.load_checkpoint(path)


def test_truncated_header_is_header_error(tmp_path):
    path = tmp_path / "ck.bin"
    checkpoint.save_checkpoint(path, _nets(8))
    blob = path.read_bytes()
    path.write_bytes(blob[:10])
    with pytest.raises(checkpoint.HeaderError):
        checkpoint.load_checkpoint(path)


def test_save_trainer_and_reload_evaluates_identically(tmp_path):
    env = gateworld.GateEnv(seed=9)
    tr = td3core.Trainer(env, td3core.Td3Config(batch_size=16, learning_starts=16),
                         seed=9)
    tr.train(150)
    path = tmp_path / "trainer.bin"
    checkpoint.save_trainer(path, tr, config_hash=7)
    data = checkpoint.load_checkpoint(path)
    assert data.env_steps == 150
    assert set(data.nets) == {"actor", "critic1", "critic2", "target_actor",
                              "target_critic1", "target_critic2"}
    obs = np.random.default_rng(10).normal(size=8)
    a0 = td3core.greedy_action(tr.actor, obs)
    a1 = td3core.greedy_action(data.nets["actor"], obs)
    assert np.array_equal(a0, a1)
    assert data.adam["critic1"].t == tr.adam_critic1.t
