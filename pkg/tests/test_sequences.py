"""Checks for the shipped transcriptions of the hardware pulse tables."""

import numpy as np
import pytest
from math import pi
from pathlib import Path

from spinmaps.channels import Channel, choi, process_fidelity
from spinmaps.cli import _verify_swap, verify_sequences
from spinmaps.gateset import (
    min_register_size,
    parse_sequence,
    sequence_channel,
    sequence_unitary,
    serialize_sequence,
)
from spinmaps.maps import DissipativeMapSpec, elementary_dissipative_map
from spinmaps.register import qubit_register

TABLES = Path(__file__).resolve().parents[1] / "src" / "spinmaps" / "data" / "pulse_tables"

EXPECTED_PULSE_COUNTS = {
    "decoupling.txt": 9,
    "ancilla_reset.txt": 4,
    "single_dissipative_map.txt": 19,
    "hamiltonian_3spin.txt": 7,
    "hamiltonian_4spin.txt": 11,
    "qnd_number_map.txt": 19,
    "removal_number_map.txt": 15,
    "injection_number_map.txt": 22,
    "swap.txt": 6,
}


def normalized_pulse_lines(text):
    lines = []
    for raw in text.splitlines():
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            lines.append("".join(stripped.split()))
    return lines


class TestTableFiles:
    def test_all_nine_tables_present(self):
        names = sorted(p.name for p in TABLES.glob("*.txt"))
        assert names == sorted(EXPECTED_PULSE_COUNTS)

    @pytest.mark.parametrize("name,count", sorted(EXPECTED_PULSE_COUNTS.items()))
    def test_parses_with_expected_length(self, name, count):
        seq = parse_sequence((TABLES / name).read_text())
        assert len(seq) == count

    @pytest.mark.parametrize("name", sorted(EXPECTED_PULSE_COUNTS))
    def test_roundtrip_byte_equal_modulo_whitespace(self, name):
        text = (TABLES / name).read_text()
        seq = parse_sequence(text)
        assert parse_sequence(serialize_sequence(seq)) == seq
        assert normalized_pulse_lines(serialize_sequence(seq)) == normalized_pulse_lines(text)

    @pytest.mark.parametrize("name", sorted(set(EXPECTED_PULSE_COUNTS) - {"ancilla_reset.txt"}))
    def test_pulse_only_tables_interpret_to_unitaries(self, name):
        seq = parse_sequence((TABLES / name).read_text())
        layout = qubit_register(min_register_size(seq))
        u = sequence_unitary(seq, layout)
        assert np.max(np.abs(u.conj().T @ u - np.eye(layout.dim))) <= 1e-12

    def test_reset_table_interprets_to_cptp_channel(self):
        seq = parse_sequence((TABLES / "ancilla_reset.txt").read_text())
        layout = qubit_register(min_register_size(seq))
        ch = sequence_channel(seq, layout)
        total = sum(k.conj().T @ k for k in ch.kraus_ops)
        assert np.allclose(total, np.eye(layout.dim), atol=1e-12)


class TestSwapTable:
    def test_reproduces_flip_flop_unitary(self):
        seq = parse_sequence((TABLES / "swap.txt").read_text())
        result = _verify_swap(seq)
        assert result["fidelity"] >= 1 - 1e-9

    def test_swaps_an_excitation_between_ancilla_and_target(self):
        seq = parse_sequence((TABLES / "swap.txt").read_text())
        lay = qubit_register(3)
        u = sequence_unitary(seq, lay)
        src = np.zeros(8, dtype=complex)
        src[lay.index_of([0, 1, 0])] = 1.0  # excitation on the target ion
        out = u @ src
        dst = lay.index_of([1, 0, 0])
        assert abs(out[dst]) == pytest.approx(1.0, abs=1e-12)


class TestDissipativeMapTable:
    def test_with_reset_forms_three_ion_channel(self):
        text = (TABLES / "single_dissipative_map.txt").read_text() + "RESET(0)\n"
        seq = parse_sequence(text)
        lay = qubit_register(3)
        ch = sequence_channel(seq, lay)
        total = sum(k.conj().T @ k for k in ch.kraus_ops)
        assert np.allclose(total, np.eye(8), atol=1e-12)


class TestVerifyDirectory:
    def test_report_structure_and_diagnostics(self, tmp_path):
        # run the full verifier on a trimmed directory to keep this fast:
        # one exact target, one diagnostic-free table, one parse failure
        src = tmp_path / "tables"
        src.mkdir()
        for name in ("swap.txt", "ancilla_reset.txt"):
            (src / name).write_text((TABLES / name).read_text())
        (src / "broken.txt").write_text("R(0.5, oops)\n")
        report = verify_sequences(src)
        by_name = {e["file"]: e for e in report["files"]}
        assert by_name["broken.txt"]["parse_ok"] is False
        assert "line 1" in by_name["broken.txt"]["error"]
        assert by_name["ancilla_reset.txt"]["channel_ok"] is True
        assert by_name["ancilla_reset.txt"]["roundtrip_ok"] is True
        swap = by_name["swap.txt"]
        assert swap["unitary_ok"] is True
        assert swap["reference"]["fidelity"] >= 1 - 1e-9

    def test_empty_directory_gives_empty_report(self, tmp_path):
        report = verify_sequences(tmp_path)
        assert report["files"] == []
