"""Acceptance gate: one test per advertised criterion, each printing a
pass/fail line through the `acceptance` recorder.

These deliberately re-exercise behavior covered by the per-module suites,
at the stated scales and tolerances, through the public API only.
"""

import hashlib
import math
import random
import time
from dataclasses import replace

import pytest

from credsec.authority import sample_dummy_params
from credsec.bench import random_text
from credsec.codec import c2i_encode
from credsec.config import Config
from credsec.dna import DnaParams, dna_decode, dna_encode, dna_keygen
from credsec.errors import AuthFailed, DummyMismatch
from credsec.ledger import Ledger, block_spans, make_record
from credsec.m2fe import (
    bits_to_digits,
    credential_verify,
    digits_to_bits,
    envelope_parse,
    envelope_serialize,
    m2fe_decrypt,
    m2fe_encrypt,
)
from credsec.rsa import rsa_keygen
from credsec.service import build_stack
from credsec.tamper import tamper_ledger, tamper_lds

PAPER_SIZES_KB = (50, 100, 200, 300, 500)

# frozen small-parameter pipeline vector (N=3233, e=17, k=3, S=10, T=7, rule 0)
GOLDEN_TEXT = "Hi"
GOLDEN_BASES = "GGGATCTGTCCTCGACAAGCACGG"
GOLDEN_ENVELOPE_HEX = "43534543010003000400000000000000040000000000000030a8ded761091a"
GOLDEN_HASH_HEX = "2a10d0ad42bfc2e77b83b0ac3a68b21594ec46f1b6025a30688b2ad097dcd79b"


@pytest.fixture(scope="module")
def world1024(keys_1024):
    """Full-size cipher world shared by the expensive criteria."""
    params, keys = keys_1024
    rng = random.Random(0xDA7A)
    S, T = sample_dummy_params(16, rng)
    dk = dna_keygen(DnaParams(S=S, T=T, K=16))
    return {"params": params, "keys": keys, "S": S, "T": T,
            "dk": dk, "Y": rng.randrange(24), "k": 300}


def _roundtrip(text, w):
    env, _ = m2fe_encrypt(text, w["keys"].e, w["params"].N, w["dk"], w["Y"],
                          w["S"], w["T"], k=w["k"])
    return m2fe_decrypt(env, w["keys"].d, w["params"].N, w["dk"], w["Y"],
                        w["S"], w["T"])


def test_criterion_1_m2fe_roundtrip(acceptance, world1024):
    assert world1024["keys"].e == 65537
    rng = random.Random(0xA11CE)
    start = time.perf_counter()
    failures = 0
    for _ in range(1000):
        text = random_text(rng, rng.randrange(4097))
        if _roundtrip(text, world1024) != text:
            failures += 1
    for kb in PAPER_SIZES_KB:
        text = random_text(rng, kb * 1024)
        if _roundtrip(text, world1024) != text:
            failures += 1
    elapsed = time.perf_counter() - start
    acceptance(1, "m2fe-roundtrip",
               failures == 0 and elapsed < 300.0,
               f"{1005 - failures}/1005 byte-exact (1000 random + 5 paper sizes) "
               f"in {elapsed:.1f}s, budget 300s")


def test_criterion_2_c2i_size(acceptance):
    rng = random.Random(0xC21)
    exact = 0
    for _ in range(100):
        text = random_text(rng, rng.randrange(1, 2000))
        if len(c2i_encode(text)) == 2 * len(text):
            exact += 1
    acceptance(2, "c2i-size",
               exact == 100,
               f"{exact}/100 strings encode to exactly 2n digits "
               f"(33.3% below the 3n ASCII-decimal baseline)")


def test_criterion_3_golden_vector(acceptance, toy):
    results = []
    for _ in range(2):  # determinism: the whole pipeline has no hidden state
        env, h_c = m2fe_encrypt(GOLDEN_TEXT, toy["e"], toy["N"], toy["dk"],
                                toy["Y"], toy["S"], toy["T"], k=toy["k"])
        results.append((env.bases, envelope_serialize(env).hex(), h_c.hex()))
    stable = results[0] == results[1]
    bases, blob_hex, hash_hex = results[0]
    frozen = (bases == GOLDEN_BASES and blob_hex == GOLDEN_ENVELOPE_HEX
              and hash_hex == GOLDEN_HASH_HEX)
    env = envelope_parse(bytes.fromhex(blob_hex))
    decrypts = (m2fe_decrypt(env, toy["d"], toy["N"], toy["dk"], toy["Y"],
                             toy["S"], toy["T"]) == GOLDEN_TEXT
                and m2fe_decrypt(env, toy["d_lcm"], toy["N"], toy["dk"], toy["Y"],
                                 toy["S"], toy["T"]) == GOLDEN_TEXT)
    acceptance(3, "golden-pipeline-vector",
               stable and frozen and decrypts,
               f"31-byte envelope {blob_hex[:16]}.. and hash match the frozen "
               f"vector; decrypts under both private exponents")


def test_criterion_4_tamper_detect_and_recover(acceptance, tmp_path):
    cfg = Config(data_dir=tmp_path, rsa_bits=256, dummy_budget=16)
    rng = random.Random(0xD00D)
    stack = build_stack(cfg, rng=rng)
    nonce = stack.cta.register_instructor("ins@a.edu", "INS1")
    stack.cms.register_instructor("ins@a.edu", "pw-i", "INS1", nonce)
    bundle = stack.cta.register_student("std@a.edu", "R001")
    stack.cms.register_student("std@a.edu", "pw-s", "R001")
    ins_token = stack.cms.login("ins@a.edu", "pw-i", nonce=nonce).token
    std_token = stack.cms.login("std@a.edu", "pw-s").token

    good = 0
    for trial in range(100):
        text = random_text(rng, rng.randrange(1, 201))
        course = f"C{trial:03d}"
        env, h_c = m2fe_encrypt(text, bundle.e, bundle.N, bundle.dk, bundle.Y,
                                bundle.S, bundle.T, k=bundle.k)
        blob = envelope_serialize(env)
        stack.cms.upload(ins_token, "R001", course, blob, h_c)
        tamper_lds(stack.lds, "R001", course,
                   byte_flips=[rng.randrange(len(blob))],
                   xor=rng.randrange(1, 256))
        data, stored = stack.cms.retrieve(std_token, "R001", course)
        detected = not credential_verify(hashlib.sha256(data).digest(), stored)
        stack.cms.recover("R001", course, token=std_token)
        data, stored = stack.cms.retrieve(std_token, "R001", course)
        repaired = credential_verify(hashlib.sha256(data).digest(), stored)
        decrypted = m2fe_decrypt(envelope_parse(data), bundle.d, bundle.N,
                                 bundle.dk, bundle.Y, bundle.S, bundle.T)
        if detected and repaired and decrypted == text:
            good += 1
    acceptance(4, "tamper-detect-and-recover",
               good == 100,
               f"{good}/100 corrupted store entries detected, restored from "
               f"the ledger, and decrypted to the original")


def test_criterion_5_ledger_immutability(acceptance, tmp_path):
    chain = Ledger(tmp_path / "chain.bin")
    rng = random.Random(0x1ED6)
    for i in range(20):
        chain.append([make_record(f"R{i % 5}", f"C{i}",
                                  rng.randbytes(rng.randrange(40, 200)), "INS1")])
    spans = block_spans(chain.path)
    detected = 0
    trials = 0
    for idx, (offset, length) in enumerate(spans):
        for _ in range(8):
            bit = rng.randrange(length * 8)
            tamper_ledger(chain.path, idx, bits=[bit])
            ok, first_bad = chain.verify()
            if not ok and first_bad is not None and first_bad <= idx + 1:
                detected += 1
            trials += 1
            tamper_ledger(chain.path, idx, bits=[bit])  # restore
    intact_again = chain.verify() == (True, None)
    acceptance(5, "ledger-immutability",
               detected == trials == 160 and intact_again,
               f"{detected}/{trials} single-bit flips across 20 blocks flagged "
               f"at or before the next index; chain clean after restore")


def test_criterion_6_size_law(acceptance, world1024):
    w = world1024
    D = len(str(w["params"].N))
    delta_eff = min((2 * w["S"]) % w["T"], D)
    rng = random.Random(0x512E)
    exact = True
    ratios = []
    for kb in PAPER_SIZES_KB:
        text = random_text(rng, kb * 1024)
        env, _ = m2fe_encrypt(text, w["keys"].e, w["params"].N, w["dk"], w["Y"],
                              w["S"], w["T"], k=w["k"])
        n = math.ceil(2 * len(text) / w["k"])
        expected_bits = 4 * (n * D + (n - 1) * delta_eff)
        exact = exact and 2 * len(env.bases) == expected_bits
        ratios.append(2 * len(env.bases) / (8 * len(text)))
    spread = max(ratios) / min(ratios)
    acceptance(6, "ciphertext-size-law",
               exact and spread <= 1.05,
               f"payload bits = 4*(n*D+(n-1)*delta) exact for all 5 sizes; "
               f"cipher/plain ratio {ratios[0]:.3f} with spread {spread:.4f} (<= 1.05)")


def test_criterion_7_enc_dec_parity(acceptance, world1024):
    w = world1024
    keys = rsa_keygen(w["params"], random.Random(0x5EED), exponent_mode="random")
    assert keys.e != 65537  # the parity claim only holds for full-size exponents
    text = random_text(random.Random(0x7E57), 100 * 1024)
    t0 = time.perf_counter()
    env, _ = m2fe_encrypt(text, keys.e, w["params"].N, w["dk"], w["Y"],
                          w["S"], w["T"], k=w["k"])
    t1 = time.perf_counter()
    out = m2fe_decrypt(env, keys.d, w["params"].N, w["dk"], w["Y"], w["S"], w["T"])
    t2 = time.perf_counter()
    enc, dec = t1 - t0, t2 - t1
    ratio = max(enc, dec) / min(enc, dec)
    acceptance(7, "enc-dec-parity",
               out == text and ratio <= 3.0,
               f"100 KB with full-size random e: encrypt {enc:.2f}s, "
               f"decrypt {dec:.2f}s, ratio {ratio:.2f} (<= 3)")


def test_criterion_8_authentication_gates(acceptance, tmp_path):
    cfg = Config(data_dir=tmp_path, rsa_bits=64, dummy_budget=8)
    rng = random.Random(0xFACE)
    stack = build_stack(cfg, rng=rng)
    stack.cta.register_student("std@a.edu", "R001")
    stack.cms.register_student("std@a.edu", "pw-std", "R001")

    def wrong(value):
        while True:
            cand = "".join(rng.choices("0123456789abcdef", k=len(value)))
            if cand != value:
                return cand

    passed = 0
    for trial in range(50):
        email, ins_id = f"i{trial}@a.edu", f"INS{trial:02d}"
        nonce = stack.cta.register_instructor(email, ins_id)
        gates = []
        b, reason = stack.cms.register_instructor(email, "pw-i", ins_id, wrong(nonce))
        gates.append(b == 0 and reason == "nonce-rejected")
        b, _ = stack.cms.register_instructor(email, "pw-i", ins_id, nonce)
        gates.append(b == 1)
        for bad_login in (
            lambda: stack.cms.login(email, "pw-i", nonce=wrong(nonce)),
            lambda: stack.cms.login(email, wrong("pw-i"), nonce=nonce),
            lambda: stack.cms.login("std@a.edu", wrong("pw-std")),
        ):
            try:
                bad_login()
                gates.append(False)
            except AuthFailed:
                gates.append(True)
        gates.append(bool(stack.cms.login(email, "pw-i", nonce=nonce).token))
        gates.append(bool(stack.cms.login("std@a.edu", "pw-std").token))
        if all(gates):
            passed += 1
    acceptance(8, "authentication-gates",
               passed == 50,
               f"{passed}/50 trials: wrong nonce and wrong password rejected "
               f"uniformly, correct credentials accepted")


def test_criterion_9_dummy_channel(acceptance, toy):
    rng = random.Random(0xD133)
    D = 4  # decimal width of N=3233
    delta_eff = min((2 * toy["S"]) % toy["T"], D)
    assert delta_eff >= 1
    hits = 0
    for _ in range(50):
        text = random_text(rng, rng.randrange(2, 51))
        env, _ = m2fe_encrypt(text, toy["e"], toy["N"], toy["dk"], toy["Y"],
                              toy["S"], toy["T"], k=toy["k"])
        digits = bits_to_digits(dna_decode(env.bases, toy["dk"], toy["Y"]))
        n = math.ceil(2 * len(text) / toy["k"])
        seam = rng.randrange(1, n)
        pos = seam * D + (seam - 1) * delta_eff + rng.randrange(delta_eff)
        replacement = rng.choice([d for d in "0123456789" if d != digits[pos]])
        mutated = digits[:pos] + replacement + digits[pos + 1 :]
        forged = replace(env, bases=dna_encode(digits_to_bits(mutated),
                                               toy["dk"], toy["Y"]))
        try:
            m2fe_decrypt(forged, toy["d"], toy["N"], toy["dk"], toy["Y"],
                         toy["S"], toy["T"])
        except DummyMismatch:
            hits += 1
    acceptance(9, "dummy-verification-channel",
               hits == 50,
               f"{hits}/50 single-dummy-digit corruptions raised DummyMismatch "
               f"with delta_eff={delta_eff}")
