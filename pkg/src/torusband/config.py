"""INI-style experiment configuration.

One file drives every pipeline stage; each section gathers the knobs of one
stage ([symbol], [grid], [spectrum], [classical], [predict], [compare],
[model1d], [rescheck], [output]).  Values are plain "key = value" pairs;
lists are whitespace separated.  Parsing failures raise ConfigError naming
the section and key, which the command line maps to exit code 2.
"""

import configparser
import re

from .errors import ConfigError


class ExperimentConfig:
    """A thin typed view over a parsed INI file."""

    def __init__(self, parser, path):
        self.parser = parser
        self.path = str(path)

    @classmethod
    def load(cls, path):
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # keys are case-sensitive (q0[1,0] etc.)
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}")
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}")
        return cls(parser, path)

    def has(self, section, key=None):
        if key is None:
            return self.parser.has_section(section)
        return self.parser.has_option(section, key)

    def _raw(self, section, key, default, required):
        if not self.parser.has_option(section, key):
            if required:
                raise ConfigError(
                    f"{self.path}: missing [{section}] {key}")
            return default
        return self.parser.get(section, key)

    def get_str(self, section, key, default=None, required=False):
        val = self._raw(section, key, default, required)
        return val if val is None else str(val).strip()

    def get_int(self, section, key, default=None, required=False):
        val = self._raw(section, key, default, required)
        if val is None or isinstance(val, int):
            return val
        try:
            return int(str(val).strip())
        except ValueError:
            raise ConfigError(
                f"{self.path}: [{section}] {key} = {val!r} is not an integer")

    def get_float(self, section, key, default=None, required=False):
        val = self._raw(section, key, default, required)
        if val is None or isinstance(val, float):
            return val
        try:
            return float(str(val).strip())
        except ValueError:
            raise ConfigError(
                f"{self.path}: [{section}] {key} = {val!r} is not a number")

    def get_floats(self, section, key, default=None, required=False):
        val = self._raw(section, key, default, required)
        if val is None or isinstance(val, (list, tuple)):
            return val
        try:
            return [float(p) for p in str(val).split()]
        except ValueError:
            raise ConfigError(
                f"{self.path}: [{section}] {key} = {val!r} is not a "
                "whitespace-separated list of numbers")

    def get_pairs(self, section, key, default=None, required=False):
        """Parse 'm,n m,n ...' into a list of integer pairs."""
        val = self._raw(section, key, default, required)
        if val is None or isinstance(val, list):
            return val
        pairs = []
        for token in str(val).split():
            m = re.fullmatch(r"(-?\d+)\s*,\s*(-?\d+)", token)
            if not m:
                raise ConfigError(
                    f"{self.path}: [{section}] {key}: bad pair {token!r}, "
                    "expected m,n")
            pairs.append((int(m.group(1)), int(m.group(2))))
        return pairs

    def get_complex_map(self, section, prefix):
        """Collect keys like prefix[indices] = re im into {indices: complex}.

        Used for inline symbol coefficients (q0[1,0] = 0.5 0) and for 1-d
        potentials (v[1] = -0.5 0).
        """
        out = {}
        if not self.parser.has_section(section):
            return out
        pattern = re.compile(re.escape(prefix) + r"\[([-\d,\s]+)\]")
        for key, val in self.parser.items(section):
            m = pattern.fullmatch(key.strip())
            if not m:
                continue
            try:
                idx = tuple(int(p) for p in m.group(1).split(","))
            except ValueError:
                raise ConfigError(
                    f"{self.path}: [{section}] {key}: bad index list")
            parts = str(val).split()
            if len(parts) not in (1, 2):
                raise ConfigError(
                    f"{self.path}: [{section}] {key} = {val!r}, expected "
                    "'re' or 're im'")
            try:
                re_part = float(parts[0])
                im_part = float(parts[1]) if len(parts) == 2 else 0.0
            except ValueError:
                raise ConfigError(
                    f"{self.path}: [{section}] {key} = {val!r} is not numeric")
            out[idx[0] if len(idx) == 1 else idx] = complex(re_part, im_part)
        return out
