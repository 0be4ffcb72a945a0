#!/usr/bin/env python3
"""Regenerate data/stdlib/<series>.txt from a Python 3.10 host interpreter.

The 3.10 set comes from sys.stdlib_module_names; every other 3.x series is
derived from it by applying the documented additions/removals between
releases. The 2.7 list is curated by hand (the module index differs too much
from 3.x to derive it).

Run from the repository root:  python3 tools/gen_stdlib_lists.py
"""

import sys
from pathlib import Path

if sys.version_info[:2] != (3, 10):
    sys.exit("regenerate with a 3.10 interpreter (base set comes from it)")

BASE_310 = set(sys.stdlib_module_names)

# name -> (added_in, removed_in); removal bound is exclusive.
DELTAS = {
    "asyncio": ("3.4", None),
    "enum": ("3.4", None),
    "ensurepip": ("3.4", None),
    "pathlib": ("3.4", None),
    "selectors": ("3.4", None),
    "statistics": ("3.4", None),
    "tracemalloc": ("3.4", None),
    "typing": ("3.5", None),
    "zipapp": ("3.5", None),
    "secrets": ("3.6", None),
    "contextvars": ("3.7", None),
    "dataclasses": ("3.7", None),
    "graphlib": ("3.9", None),
    "zoneinfo": ("3.9", None),
    "tomllib": ("3.11", None),
    "fpectl": (None, "3.7"),
    "macpath": (None, "3.8"),
    "dummy_threading": (None, "3.9"),
    "_dummy_thread": (None, "3.9"),
    "formatter": (None, "3.10"),
    "parser": (None, "3.10"),
    "symbol": (None, "3.10"),
    "binhex": (None, "3.11"),
    "asynchat": (None, "3.12"),
    "asyncore": (None, "3.12"),
    "distutils": (None, "3.12"),
    "imp": (None, "3.12"),
    "smtpd": (None, "3.12"),
}

SERIES3 = ["3.4", "3.5", "3.6", "3.7", "3.8", "3.9", "3.10", "3.11", "3.12"]

PY27 = """
__builtin__ __future__ __main__ _ast _bisect _codecs _collections _csv _ctypes
_curses _elementtree _functools _hashlib _heapq _io _json _locale _md5
_multiprocessing _osx_support _pyio _random _sha _sha256 _sha512 _socket
_sqlite3 _sre _ssl _strptime _struct _symtable _threading_local _tkinter
_warnings _weakref _weakrefset _winreg abc aifc antigravity anydbm argparse
array ast asynchat asyncore atexit audiodev audioop base64 BaseHTTPServer
Bastion bdb binascii binhex bisect bsddb bz2 calendar CGIHTTPServer cgi cgitb
chunk cmath cmd code codecs codeop collections colorsys commands compileall
compiler ConfigParser contextlib Cookie cookielib copy copy_reg cPickle
cProfile crypt cStringIO csv ctypes curses datetime dbhash dbm decimal difflib
dircache dis distutils dl doctest DocXMLRPCServer dumbdbm dummy_thread
dummy_threading email encodings ensurepip errno exceptions fcntl filecmp
fileinput fnmatch formatter fpectl fpformat fractions ftplib functools
future_builtins gc gdbm genericpath getopt getpass gettext glob grp gzip
hashlib heapq hmac hotshot htmlentitydefs htmllib HTMLParser httplib idlelib
ihooks imageop imaplib imghdr imp importlib imputil inspect io itertools json
keyword lib2to3 linecache linuxaudiodev locale logging macpath macurl2path
mailbox mailcap markupbase marshal math md5 mhlib mimetools mimetypes
MimeWriter mimify mmap modulefinder multifile multiprocessing mutex netrc new
nis nntplib ntpath nturl2path numbers opcode operator optparse os os2emxpath
ossaudiodev parser pdb pickle pickletools pipes pkgutil platform plistlib
popen2 poplib posix posixfile posixpath pprint profile pstats pty pwd
py_compile pyclbr pydoc pydoc_data pyexpat Queue quopri random re readline
repr resource rexec rfc822 rlcompleter robotparser runpy sched ScrolledText
select sets sgmllib sha shelve shlex shutil signal SimpleHTTPServer
SimpleXMLRPCServer site smtpd smtplib sndhdr socket SocketServer spwd sqlite3
sre sre_compile sre_constants sre_parse ssl stat statvfs string StringIO
stringold stringprep strop struct subprocess sunau sunaudio symbol symtable
sys sysconfig syslog tabnanny tarfile telnetlib tempfile termios test textwrap
this thread threading time timeit Tix Tkconstants Tkdnd tkColorChooser
tkCommonDialog tkFileDialog tkFont tkMessageBox tkSimpleDialog Tkinter toaiff
token tokenize trace traceback ttk tty turtle types unicodedata unittest
urllib urllib2 urlparse user UserDict UserList UserString uu uuid warnings
wave weakref webbrowser whichdb winsound wsgiref xdrlib xml xmllib xmlrpclib
zipfile zlib zipimport
""".split()


def series_key(series: str) -> tuple:
    major, minor = series.split(".")
    return (int(major), int(minor))


def list_for(series: str) -> set:
    names = set(BASE_310)
    for name, (added, removed) in DELTAS.items():
        present = True
        if added is not None and series_key(series) < series_key(added):
            present = False
        if removed is not None and series_key(series) >= series_key(removed):
            present = False
        if present:
            names.add(name)
        else:
            names.discard(name)
    return names


def main() -> None:
    out_dir = Path(__file__).resolve().parent.parent / "data" / "stdlib"
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "2.7.txt").write_text("\n".join(sorted(set(PY27))) + "\n")
    for series in SERIES3:
        names = sorted(list_for(series))
        (out_dir / f"{series}.txt").write_text("\n".join(names) + "\n")
    print(f"wrote {len(SERIES3) + 1} lists under {out_dir}")


if __name__ == "__main__":
    main()
