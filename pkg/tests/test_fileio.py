import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinmerism.errors import ConfigError, FcidumpError, IntegrityError
from spinmerism.fileio import (REQUIRED, ConfigSpec, atomic_write, canonical, csv_text,
                               format_float, json_text, load_config, parse_fcidump,
                               parse_orbitals, read_fcidump, timestamp, write_fcidump)
from spinmerism.models import build_hubbard_dimer
from spinmerism.secondq import random_integral_set

HEADER = "&FCI NORB=2,NELEC=2,MS2=0,\n ORBSYM=1,1,\n ISYM=1,\n&END\n"


def write(tmp_path, text, name="FCIDUMP"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestFcidump:
    def test_minimal_file(self, tmp_path):
        p = write(tmp_path, HEADER + " 0.5 1 1 1 1\n 0.5D0 2 2 2 2\n -0.1 1 2 0 0\n 1.25 0 0 0 0\n")
        data = read_fcidump(p)
        assert (data.nelec, data.ms2, data.orbsym, data.isym) == (2, 0, (1, 1), 1)
        ints = data.ints
        assert ints.core_energy == 1.25
        assert ints.h[0, 1] == ints.h[1, 0] == -0.1
        assert ints.g[1, 1, 1, 1] == 0.5

    def test_eightfold_expansion(self, tmp_path):
        p = write(tmp_path, HEADER + " 0.3 1 2 1 1\n")
        g = parse_fcidump(p).g
        for idx in [(0, 1, 0, 0), (1, 0, 0, 0), (0, 0, 0, 1), (0, 0, 1, 0)]:
            assert g[idx] == 0.3

    @given(st.integers(0, 2**31 - 1), st.integers(1, 5))
    def test_round_trip(self, tmp_path_factory, seed, norb):
        ints = random_integral_set(norb, seed=seed)
        p = tmp_path_factory.mktemp("rt") / "FCIDUMP"
        write_fcidump(p, ints, nelec=norb, ms2=norb % 2)
        back = read_fcidump(p)
        assert back.nelec == norb and back.ms2 == norb % 2
        assert np.allclose(back.ints.h, ints.h, atol=1e-15, rtol=1e-15)
        assert np.allclose(back.ints.g, ints.g, atol=1e-15, rtol=1e-15)
        assert back.ints.core_energy == ints.core_energy

    def test_slash_terminated_header(self, tmp_path):
        p = write(tmp_path, "&FCI NORB=1,NELEC=1,MS2=1,ORBSYM=1,\n/\n 1.0 1 1 0 0\n")
        assert read_fcidump(p).ints.h[0, 0] == 1.0

    def test_index_beyond_norb_reports_line(self, tmp_path):
        p = write(tmp_path, HEADER + " 0.5 1 1 1 1\n 0.5 3 1 0 0\n")
        with pytest.raises(FcidumpError) as info:
            read_fcidump(p)
        assert info.value.lineno == 6
        assert str(info.value).startswith("line 6:")

    def test_conflicting_duplicates(self, tmp_path):
        p = write(tmp_path, HEADER + " 0.5 1 2 1 1\n 0.6 2 1 1 1\n")
        with pytest.raises(IntegrityError):
            read_fcidump(p)

    def test_consistent_duplicates_accepted(self, tmp_path):
        p = write(tmp_path, HEADER + " 0.5 1 2 1 1\n 0.5 2 1 1 1\n")
        assert read_fcidump(p).ints.g[0, 1, 0, 0] == 0.5

    @pytest.mark.parametrize("body", [
        " 0.5 1 1 0 1\n",            # mixed zero pattern
        " abc 1 1 1 1\n",            # bad number
        " 0.5 1 1 1\n",              # too few fields
    ])
    def test_malformed_lines(self, tmp_path, body):
        with pytest.raises(FcidumpError):
            read_fcidump(write(tmp_path, HEADER + body))

    @pytest.mark.parametrize("header", [
        "&FCI NELEC=2,MS2=0,\n&END\n",                          # no NORB
        "&FCI NORB=2,NELEC=2,MS2=0,ORBSYM=1,\n&END\n",          # ORBSYM length
        "&FCI NORB=2,NELEC=2,MS2=0,UHF=.TRUE.,\n&END\n",       # unrestricted
        "&FCI NORB=2,NELEC=2,MS2=1,\n&END\n",                  # parity of NELEC and MS2
        "NORB=2\n",                                            # no namelist start
    ])
    def test_bad_headers(self, tmp_path, header):
        with pytest.raises(FcidumpError):
            read_fcidump(write(tmp_path, header + " 1.0 1 1 1 1\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FcidumpError):
            read_fcidump(tmp_path / "nope")

    def test_hubbard_file_gives_hubbard_spectrum(self, tmp_path):
        from spinmerism.eigensolve import diagonalize
        from spinmerism.fockspace import SectorSpec, build_sector_basis
        from spinmerism.secondq import build_hamiltonian
        from oracles import hubbard_dimer_spectrum
        p = tmp_path / "FCIDUMP"
        write_fcidump(p, build_hubbard_dimer(1.0, 0.25), nelec=2)
        h = build_hamiltonian(build_sector_basis(SectorSpec(2, 1, 1)), parse_fcidump(p))
        assert np.allclose(diagonalize(h).eigenvalues, hubbard_dimer_spectrum(1.0, 0.25), atol=1e-12)


class TestConfig:
    spec = ConfigSpec().section("model", kind=(str, "x"), J=(float, None)).section(
        "sector", norb=(int, REQUIRED))

    def test_defaults_and_values(self, tmp_path):
        p = write(tmp_path, "[model]\nJ = 3.5\n[sector]\nnorb = 4\n", "c.ini")
        cfg = load_config(str(p), self.spec)
        assert cfg == {"model": {"kind": "x", "J": 3.5}, "sector": {"norb": 4}}

    def test_inline_comments(self, tmp_path):
        p = write(tmp_path, "[model]\nJ = 3.5   ; cm-1\n[sector]\nnorb = 4 # four\n", "c.ini")
        assert load_config(str(p), self.spec)["model"]["J"] == 3.5
        assert load_config(str(p), self.spec)["sector"]["norb"] == 4

    @pytest.mark.parametrize("text", [
        "[model]\nJJ = 1\n[sector]\nnorb = 1\n",       # unknown key
        "[extra]\n[sector]\nnorb = 1\n",               # unknown section
        "[model]\nJ = 1\n",                            # missing required
        "[sector]\nnorb = four\n",                     # bad value
        "[sector]\nnorb = 1\nnorb = 2\n",              # duplicate key
    ])
    def test_strictness(self, tmp_path, text):
        with pytest.raises(ConfigError):
            load_config(str(write(tmp_path, text, "c.ini")), self.spec)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "none.ini"), self.spec)

    def test_parse_orbitals(self):
        assert parse_orbitals("0, 1 2,3") == (0, 1, 2, 3)
        with pytest.raises(ConfigError):
            parse_orbitals("a b")


class TestOutput:
    @pytest.mark.parametrize("x, text", [(0.0, "0"), (-0.0, "0"), (1 / 3, "0.333333333333"),
                                         (1e-20, "1e-20"), (float("nan"), "")])
    def test_format_float(self, x, text):
        assert format_float(x) == text

    def test_canonical_json(self):
        doc = {"a": np.float64(1 / 3), "b": [np.int64(2), float("nan")], "c": np.bool_(True)}
        assert json.loads(json_text(doc)) == {"a": 0.333333333333, "b": [2, None], "c": True}

    def test_csv_line_endings(self):
        assert csv_text(["x", "y"], [[1.5, None]]) == "x,y\r\n1.5,\r\n"

    def test_atomic_write_replaces(self, tmp_path):
        p = tmp_path / "sub" / "f.txt"
        atomic_write(p, "one")
        atomic_write(p, "two")
        assert p.read_text() == "two"
        assert [q.name for q in p.parent.iterdir()] == ["f.txt"]

    def test_timestamp(self, monkeypatch):
        monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)
        assert timestamp() is None
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
        assert timestamp() == "1970-01-01T00:00:00Z"
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "soon")
        with pytest.raises(ConfigError):
            timestamp()

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_canonical_is_stable(self, x):
        once = canonical(x)
        assert canonical(once) == once
        assert not math.isnan(once)
