import locale

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventrecon.errors import FormatError, InputError, ParseError
from eventrecon.event_io import (
    read_boundaries,
    read_events_text,
    read_frame_dir,
    read_frame_pgm,
    seconds_to_us,
    us_to_seconds,
    write_boundaries,
    write_events_text,
    write_frame_dir,
    write_frame_pgm,
)
from eventrecon.types import Event, EventStream, Frame


class TestSeconds:
    def test_examples(self):
        assert seconds_to_us("0.000010") == 10
        assert seconds_to_us("1") == 1_000_000
        assert seconds_to_us("2.5") == 2_500_000

    def test_half_even_beyond_microseconds(self):
        assert seconds_to_us("0.0000005") == 0
        assert seconds_to_us("0.0000015") == 2
        assert seconds_to_us("1e-5") == 10

    def test_bad(self):
        with pytest.raises(ValueError):
            seconds_to_us("abc")
        with pytest.raises(ValueError):
            seconds_to_us("inf")

    @given(st.integers(0, 10**12))
    def test_round_trip(self, t):
        assert seconds_to_us(us_to_seconds(t)) == t


class TestEventText:
    def test_single_line(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("0.000010 3 4 1\n")
        s = read_events_text(path, 8, 8)
        assert s[0] == Event(10, 3, 4, 1)

    def test_zero_polarity_is_negative(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("0.5 0 0 0\n")
        assert read_events_text(path, 1, 1).p.tolist() == [-1]

    def test_out_of_bounds_reports_line(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("0.000010 9 4 1\n")
        with pytest.raises(ParseError) as info:
            read_events_text(path, 8, 8)
        assert info.value.line == 1
        assert "line 1" in str(info.value)

    @pytest.mark.parametrize("line", ["0.1 1 1", "0.1 1 1 2", "x 1 1 1", "0.1 1.5 1 1", "-0.1 1 1 1"])
    def test_malformed(self, tmp_path, line):
        path = tmp_path / "e.txt"
        path.write_text("0.0 0 0 1\n" + line + "\n")
        with pytest.raises(ParseError) as info:
            read_events_text(path, 4, 4)
        assert info.value.line == 2

    def test_empty_file(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("")
        assert len(read_events_text(path, 4, 4)) == 0

    def test_out_of_order_is_resorted(self, tmp_path, caplog):
        path = tmp_path / "e.txt"
        path.write_text("0.000020 0 0 1\n0.000010 1 0 0\n")
        s = read_events_text(path, 2, 1)
        assert s.t.tolist() == [10, 20]
        assert "re-sorted" in caplog.text

    def test_formatting(self, tmp_path):
        path = tmp_path / "e.txt"
        write_events_text(EventStream.from_events(8, 8, [Event(10, 3, 4, 1), Event(1_500_000, 0, 1, -1)]), path)
        assert path.read_text() == "0.000010 3 4 1\n1.500000 0 1 0\n"

    def test_locale_independent(self, tmp_path):
        old = locale.setlocale(locale.LC_NUMERIC)
        try:
            for name in ("de_DE.UTF-8", "fr_FR.UTF-8"):
                try:
                    locale.setlocale(locale.LC_NUMERIC, name)
                    break
                except locale.Error:
                    continue
            path = tmp_path / "e.txt"
            write_events_text(EventStream.from_events(2, 2, [Event(123, 1, 1, 1)]), path)
            assert path.read_text() == "0.000123 1 1 1\n"
            assert read_events_text(path, 2, 2)[0].t == 123
        finally:
            locale.setlocale(locale.LC_NUMERIC, old)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 10**9), st.integers(0, 5), st.integers(0, 3), st.sampled_from([-1, 1])), max_size=40))
def test_event_file_round_trip(tmp_path_factory, evs):
    evs = sorted(evs, key=lambda e: (e[0], e[2], e[1], e[3]))
    s = EventStream.from_events(6, 4, [Event(*e) for e in evs])
    path = tmp_path_factory.mktemp("ev") / "e.txt"
    write_events_text(s, path)
    assert read_events_text(path, 6, 4) == s


class TestPgm:
    def test_byte_value(self, tmp_path):
        path = tmp_path / "f.pgm"
        path.write_bytes(b"P5\n1 1\n255\n" + bytes([128]))
        assert read_frame_pgm(path).pixels[0, 0] == 128 / 255

    def test_header_comment(self, tmp_path):
        path = tmp_path / "f.pgm"
        path.write_bytes(b"P5\n# made by hand\n2 1\n255\n" + bytes([0, 255]))
        assert read_frame_pgm(path).pixels.tolist() == [[0.0, 1.0]]

    def test_round_trip_within_half_step(self, tmp_path):
        f = Frame(np.random.default_rng(0).uniform(0, 1, (7, 9)))
        write_frame_pgm(f, tmp_path / "f.pgm")
        back = read_frame_pgm(tmp_path / "f.pgm")
        assert back.shape == (7, 9)
        assert np.abs(back.pixels - f.pixels).max() <= 1 / 510 + 1e-12

    def test_exact_levels_survive(self, tmp_path):
        f = Frame(np.arange(256, dtype=float).reshape(16, 16) / 255)
        write_frame_pgm(f, tmp_path / "f.pgm")
        assert np.array_equal(read_frame_pgm(tmp_path / "f.pgm").pixels, f.pixels)

    @pytest.mark.parametrize("data", [b"P2\n1 1\n255\n0", b"P5\n1 1\n65535\n\x00\x00", b"P5\n2 2\n255\n\x00", b"P5\n1"])
    def test_bad_files(self, tmp_path, data):
        path = tmp_path / "f.pgm"
        path.write_bytes(data)
        with pytest.raises(FormatError):
            read_frame_pgm(path)


def test_boundaries_round_trip(tmp_path):
    path = tmp_path / "b.txt"
    write_boundaries([0, 10, 25], path)
    assert read_boundaries(path) == [0, 10, 25]
    path.write_text("# comment\n0\n\n7\n")
    assert read_boundaries(path) == [0, 7]
    path.write_text("0\n1.5\n")
    with pytest.raises(ParseError):
        read_boundaries(path)


def test_frame_dir_round_trip(tmp_path):
    frames = [Frame(np.full((3, 4), v / 255), t) for v, t in ((0, 0), (40, 33), (255, 70))]
    write_frame_dir(frames, tmp_path / "d")
    back = read_frame_dir(tmp_path / "d")
    assert [f.t for f in back] == [0, 33, 70]
    assert all(np.array_equal(a.pixels, b.pixels) for a, b in zip(frames, back))
    (tmp_path / "d" / "timestamps.txt").unlink()
    assert [f.t for f in read_frame_dir(tmp_path / "d", dt=5)] == [0, 5, 10]
    with pytest.raises(InputError):
        read_frame_dir(tmp_path / "d")
    with pytest.raises(InputError):
        read_frame_dir(tmp_path / "d", timestamps=[0, 1])
    with pytest.raises(InputError):
        read_frame_dir(tmp_path / "missing", dt=1)
