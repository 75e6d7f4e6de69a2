import pytest

from fieldledger.sdk.crc32c import crc32c
from fieldledger.sdk.queue import MAGIC, DurableQueue, QueueFull, StorageCorrupt


def test_crc32c_known_vectors():
    # RFC 3720 test vectors
    assert crc32c(b"123456789") == 0xE3069283
    assert crc32c(b"") == 0x00000000
    assert crc32c(b"\x00" * 32) == 0x8A9136AA


def records(n):
    return [f'{{"event":{i}}}'.encode() for i in range(n)]


def test_fifo_across_restart(tmp_path):
    path = tmp_path / "q.flq"
    q = DurableQueue(path)
    for r in records(3):
        q.append(r)
    restored = DurableQueue(path)
    assert restored.snapshot() == records(3)
    assert restored.truncation_warnings == 0


def test_empty_file_is_empty_queue(tmp_path):
    path = tmp_path / "q.flq"
    path.write_bytes(b"")
    q = DurableQueue(path)
    assert len(q) == 0


def test_missing_file_is_empty_queue(tmp_path):
    q = DurableQueue(tmp_path / "fresh.flq")
    assert len(q) == 0
    assert (tmp_path / "fresh.flq").read_bytes() == MAGIC


def test_capacity(tmp_path):
    q = DurableQueue(tmp_path / "q.flq", capacity=3)
    for r in records(3):
        q.append(r)
    with pytest.raises(QueueFull):
        q.append(b"overflow")
    assert q.snapshot() == records(3)


def test_remove_head_preserves_order(tmp_path):
    path = tmp_path / "q.flq"
    q = DurableQueue(path)
    for r in records(5):
        q.append(r)
    q.remove_head(2)
    assert q.snapshot() == records(5)[2:]
    assert DurableQueue(path).snapshot() == records(5)[2:]


def test_corrupt_header(tmp_path):
    path = tmp_path / "q.flq"
    path.write_bytes(b"XX")
    with pytest.raises(StorageCorrupt):
        DurableQueue(path)


def test_truncation_at_every_byte_offset(tmp_path):
    golden = tmp_path / "golden.flq"
    q = DurableQueue(golden)
    for r in records(3):
        q.append(r)
    data = golden.read_bytes()

    # record boundaries: prefix lengths at which exactly k records survive
    boundaries = [len(MAGIC)]
    offset = len(MAGIC)
    for r in records(3):
        offset += 8 + len(r)
        boundaries.append(offset)
    assert boundaries[-1] == len(data)

    for cut in range(len(data) + 1):
        target = tmp_path / "cut.flq"
        target.write_bytes(data[:cut])
        if 0 < cut < len(MAGIC):
            with pytest.raises(StorageCorrupt):
                DurableQueue(target)
            continue
        restored = DurableQueue(target)
        survivors = sum(1 for b in boundaries if b <= cut) - 1 if cut >= len(MAGIC) else 0
        assert restored.snapshot() == records(3)[:survivors], f"cut at {cut}"
        torn = cut >= len(MAGIC) and cut not in boundaries
        assert restored.truncation_warnings == (1 if torn else 0), f"cut at {cut}"
        # restore truncated the tail, so a second restore is clean
        again = DurableQueue(target)
        assert again.snapshot() == records(3)[:survivors]
        assert again.truncation_warnings == 0


def test_bitflip_in_body_detected(tmp_path):
    path = tmp_path / "q.flq"
    q = DurableQueue(path)
    for r in records(2):
        q.append(r)
    data = bytearray(path.read_bytes())
    data[-2] ^= 0x01  # flip inside the last record's body
    path.write_bytes(bytes(data))
    restored = DurableQueue(path)
    assert restored.snapshot() == records(1)
    assert restored.truncation_warnings == 1
