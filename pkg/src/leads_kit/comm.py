"""Business-logic communication layer.

Server and client entities exchange separator-framed messages over a byte
transport. Sending is the only operation a caller initiates; everything
received arrives through callbacks. The server runs a listener thread plus
a pool of processor threads; callbacks for one connection are never invoked
concurrently (delivery order equals send order) while different connections
may be processed in parallel. The same connection machinery runs over a
serial-style byte stream, including an in-memory pipe for tests.
"""

from __future__ import annotations

import socket
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Protocol

from .errors import TransportError
from .framing import DEFAULT_SEPARATOR, Framer

_RECV_SIZE = 4096

OnConnect = Callable[["Connection"], None]
OnReceive = Callable[["Connection", bytes], None]
OnDisconnect = Callable[["Connection"], None]


class ByteStream(Protocol):
    """Minimal duplex byte transport: blocking read, write, close."""

    def read(self, max_bytes: int) -> bytes:
        """Up to ``max_bytes``; blocks until data is available, b'' at EOF."""

    def write(self, data: bytes) -> None: ...

    def close(self) -> None: ...


class _SocketStream:
    """Adapt a TCP socket to the :class:`ByteStream` interface."""

    def __init__(self, sock: socket.socket) -> None:
        self._sock = sock

    def read(self, max_bytes: int) -> bytes:
        try:
            return self._sock.recv(max_bytes)
        except OSError:
            return b""

    def write(self, data: bytes) -> None:
        self._sock.sendall(data)

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._sock.close()
        except OSError:
            pass


class _ByteChannel:
    """One direction of an in-memory pipe."""

    def __init__(self) -> None:
        self._buffer = bytearray()
        self._cond = threading.Condition()
        self._closed = False

    def write(self, data: bytes) -> None:
        with self._cond:
            if self._closed:
                raise TransportError("stream is closed")
            self._buffer.extend(data)
            self._cond.notify_all()

    def read(self, max_bytes: int) -> bytes:
        with self._cond:
            while not self._buffer and not self._closed:
                self._cond.wait()
            if not self._buffer:
                return b""
            data = bytes(self._buffer[:max_bytes])
            del self._buffer[:max_bytes]
            return data

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()


class _PipeStream:
    """One endpoint of an in-memory duplex pipe."""

    def __init__(self, inbound: _ByteChannel, outbound: _ByteChannel) -> None:
        self._inbound = inbound
        self._outbound = outbound

    def read(self, max_bytes: int) -> bytes:
        return self._inbound.read(max_bytes)

    def write(self, data: bytes) -> None:
        self._outbound.write(data)

    def close(self) -> None:
        self._inbound.close()
        self._outbound.close()


def memory_stream_pair() -> tuple[_PipeStream, _PipeStream]:
    """Two connected in-memory byte streams (a fake serial link)."""
    a_to_b = _ByteChannel()
    b_to_a = _ByteChannel()
    return _PipeStream(b_to_a, a_to_b), _PipeStream(a_to_b, b_to_a)


class Connection:
    """One framed duplex link; messages go out via :meth:`send` only."""

    def __init__(self, stream: ByteStream, separator: bytes, label: str = "") -> None:
        self._stream = stream
        self._framer = Framer(separator)
        self._send_lock = threading.Lock()
        self._owner: "Entity | None" = None
        self._reader: threading.Thread | None = None
        self._disconnect_fired = False
        self.closed = False
        self.label = label

    @property
    def separator(self) -> bytes:
        return self._framer.separator

    def send(self, message: bytes) -> None:
        """Frame and write one message; safe to call from any thread."""
        data = self._framer.encode(message)
        with self._send_lock:
            if self.closed:
                raise TransportError(f"connection {self.label or id(self)} is closed")
            try:
                self._stream.write(data)
            except (OSError, TransportError) as exc:
                raise TransportError(f"send failed on {self.label}: {exc}") from exc

    def close(self) -> None:
        """Tear the link down; the owning entity fires on_disconnect once."""
        if self._owner is not None:
            self._owner._request_drop(self)
        else:
            self.closed = True
            self._stream.close()

    def _feed(self, chunk: bytes) -> list[bytes]:
        return self._framer.feed(chunk)


class Entity:
    """Common callback plumbing for servers, clients, and serial links."""

    role = "entity"

    def __init__(
        self,
        on_connect: OnConnect | None = None,
        on_receive: OnReceive | None = None,
        on_disconnect: OnDisconnect | None = None,
        separator: bytes = DEFAULT_SEPARATOR,
    ) -> None:
        self._on_connect = on_connect
        self._on_receive = on_receive
        self._on_disconnect = on_disconnect
        self.separator = separator
        self._connections: list[Connection] = []
        self._conn_lock = threading.Lock()

    @property
    def connections(self) -> list[Connection]:
        with self._conn_lock:
            return list(self._connections)

    def broadcast(self, message: bytes) -> None:
        """Send to every live connection; connections that fail are dropped."""
        for conn in self.connections:
            try:
                conn.send(message)
            except TransportError:
                self._request_drop(conn)

    def _attach(self, conn: Connection) -> None:
        conn._owner = self
        with self._conn_lock:
            self._connections.append(conn)
        if self._on_connect is not None:
            self._on_connect(conn)

    def _drop(self, conn: Connection) -> None:
        """Close the link and fire on_disconnect exactly once per connection."""
        with self._conn_lock:
            first = not conn._disconnect_fired
            conn._disconnect_fired = True
            if conn in self._connections:
                self._connections.remove(conn)
        conn.closed = True
        conn._stream.close()
        if first and self._on_disconnect is not None:
            self._on_disconnect(conn)

    def _request_drop(self, conn: Connection) -> None:
        """Default drop path: immediate. Subclasses may defer for ordering."""
        self._drop(conn)

    def _deliver(self, conn: Connection, message: bytes) -> None:
        if self._on_receive is not None:
            self._on_receive(conn, message)

    def _serve_reads(self, conn: Connection) -> None:
        """Blocking read loop delivering callbacks on the reader thread."""
        while True:
            try:
                chunk = conn._stream.read(_RECV_SIZE)
            except Exception:
                chunk = b""
            if not chunk:
                break
            for message in conn._feed(chunk):
                self._deliver(conn, message)
        self._drop(conn)

    def _start_reader(self, conn: Connection, name: str) -> None:
        reader = threading.Thread(target=self._serve_reads, args=(conn,), name=name, daemon=True)
        conn._reader = reader
        reader.start()

    def close(self) -> None:
        """Drop every connection and wait for reader threads to finish."""
        for conn in self.connections:
            self._request_drop(conn)
            reader = conn._reader
            if reader is not None and reader is not threading.current_thread():
                reader.join(timeout=5)


class _Mailbox:
    """Per-connection queue that serializes pool dispatch."""

    __slots__ = ("items", "scheduled", "lock")

    def __init__(self) -> None:
        self.items: deque = deque()
        self.scheduled = False
        self.lock = threading.Lock()


class Server(Entity):
    """Listener plus processor pool.

    ``serve`` starts a listener thread that accepts connections. A reader
    thread per connection frames incoming chunks and hands complete messages
    to the pool; a per-connection mailbox keeps each connection's callbacks
    sequential while different connections run in parallel.
    """

    role = "server"

    def __init__(self, *args, **kwargs) -> None:
        super().__init__(*args, **kwargs)
        self._listener: threading.Thread | None = None
        self._listen_sock: socket.socket | None = None
        self._pool: ThreadPoolExecutor | None = None
        self._mailboxes: dict[int, _Mailbox] = {}
        self._stopping = False

    @property
    def port(self) -> int:
        if self._listen_sock is None:
            raise TransportError("server is not listening")
        return self._listen_sock.getsockname()[1]

    def serve(self, port: int, host: str = "127.0.0.1", pool_size: int = 2) -> "Server":
        """Bind and start accepting; returns immediately."""
        if pool_size < 1:
            raise TransportError(f"pool_size must be >= 1, got {pool_size}")
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            sock.bind((host, port))
        except OSError as exc:
            sock.close()
            raise TransportError(f"cannot bind {host}:{port}: {exc}") from exc
        sock.listen()
        # A thread blocked in accept() keeps the kernel listener alive even
        # after close(); poll with a short timeout so shutdown is prompt.
        sock.settimeout(0.1)
        self._listen_sock = sock
        self._pool = ThreadPoolExecutor(
            max_workers=pool_size, thread_name_prefix="leads-kit-proc"
        )
        self._listener = threading.Thread(
            target=self._accept_loop, name="leads-kit-listener", daemon=True
        )
        self._listener.start()
        return self

    def _accept_loop(self) -> None:
        assert self._listen_sock is not None
        while not self._stopping:
            try:
                client_sock, addr = self._listen_sock.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            client_sock.settimeout(None)
            conn = Connection(
                _SocketStream(client_sock), self.separator, label=f"{addr[0]}:{addr[1]}"
            )
            self._mailboxes[id(conn)] = _Mailbox()
            self._attach(conn)
            reader = threading.Thread(
                target=self._read_loop,
                args=(conn,),
                name=f"leads-kit-read-{addr[1]}",
                daemon=True,
            )
            conn._reader = reader
            reader.start()

    def _read_loop(self, conn: Connection) -> None:
        while True:
            chunk = conn._stream.read(_RECV_SIZE)
            if not chunk:
                break
            for message in conn._feed(chunk):
                self._enqueue(conn, message)
        self._enqueue(conn, None)

    def _request_drop(self, conn: Connection) -> None:
        # Unblock the reader; the disconnect callback is queued behind any
        # messages already delivered so per-connection ordering holds.
        conn.closed = True
        conn._stream.close()
        self._enqueue(conn, None)

    def _enqueue(self, conn: Connection, item: bytes | None) -> None:
        mailbox = self._mailboxes.get(id(conn))
        if mailbox is None or self._pool is None:
            return
        with mailbox.lock:
            mailbox.items.append(item)
            if mailbox.scheduled:
                return
            mailbox.scheduled = True
        try:
            self._pool.submit(self._drain, conn, mailbox)
        except RuntimeError:
            pass  # pool shut down during teardown

    def _drain(self, conn: Connection, mailbox: _Mailbox) -> None:
        while True:
            with mailbox.lock:
                if not mailbox.items:
                    mailbox.scheduled = False
                    return
                item = mailbox.items.popleft()
            if item is None:
                self._mailboxes.pop(id(conn), None)
                self._drop(conn)
            else:
                self._deliver(conn, item)

    def close(self) -> None:
        """Stop accepting, drop all connections, and release the pool."""
        self._stopping = True
        if self._listener is not None:
            self._listener.join(timeout=5)
            self._listener = None
        if self._listen_sock is not None:
            try:
                self._listen_sock.close()
            except OSError:
                pass
        for conn in self.connections:
            reader = conn._reader
            self._request_drop(conn)
            if reader is not None:
                reader.join(timeout=5)
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None
        # Anything the pool never got to: fire disconnects directly.
        for conn in self.connections:
            self._drop(conn)

    def __enter__(self) -> "Server":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


class Client(Entity):
    """Single-connection entity; callbacks run on the one reader thread."""

    role = "client"

    def connect(self, host: str, port: int) -> Connection:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        try:
            sock.connect((host, port))
        except OSError as exc:
            sock.close()
            raise TransportError(f"cannot connect to {host}:{port}: {exc}") from exc
        conn = Connection(_SocketStream(sock), self.separator, label=f"{host}:{port}")
        self._attach(conn)
        self._start_reader(conn, "leads-kit-client-read")
        return conn

    def _request_drop(self, conn: Connection) -> None:
        # Close the transport and let the reader thread fire the callback,
        # keeping on_receive/on_disconnect on a single thread.
        conn.closed = True
        conn._stream.close()


class SerialLink(Entity):
    """Client-style entity over a serial byte stream instead of a socket.

    Same framing and callback semantics; the transport is anything that
    implements :class:`ByteStream` (a serial port wrapper, or the in-memory
    pipe from :func:`memory_stream_pair` in tests).
    """

    role = "serial"

    def open(self, stream: ByteStream) -> Connection:
        conn = Connection(stream, self.separator, label="serial")
        self._attach(conn)
        self._start_reader(conn, "leads-kit-serial-read")
        return conn

    def _request_drop(self, conn: Connection) -> None:
        conn.closed = True
        conn._stream.close()


def serial_connection(
    stream: ByteStream,
    on_connect: OnConnect | None = None,
    on_receive: OnReceive | None = None,
    on_disconnect: OnDisconnect | None = None,
    separator: bytes = DEFAULT_SEPARATOR,
) -> Connection:
    """Open a framed connection over ``stream`` with the usual callbacks."""
    link = SerialLink(on_connect, on_receive, on_disconnect, separator)
    return link.open(stream)
