import threading
import time

import pytest

from leads_kit.comm import Client, SerialLink, Server, memory_stream_pair, serial_connection
from leads_kit.errors import TransportError

TIMEOUT = 5.0


class Recorder:
    """Thread-safe callback sink with wait helpers."""

    def __init__(self):
        self.messages = []
        self.connects = 0
        self.disconnects = 0
        self._lock = threading.Lock()
        self._event = threading.Event()

    def on_connect(self, conn):
        with self._lock:
            self.connects += 1
        self._event.set()

    def on_receive(self, conn, message):
        with self._lock:
            self.messages.append(message)
        self._event.set()

    def on_disconnect(self, conn):
        with self._lock:
            self.disconnects += 1
        self._event.set()

    def wait_for(self, predicate, timeout=TIMEOUT):
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._lock:
                if predicate(self):
                    return True
            self._event.wait(0.02)
            self._event.clear()
        with self._lock:
            return predicate(self)


@pytest.fixture
def server_recorder():
    return Recorder()


def start_server(recorder, pool_size=2, separator=b";"):
    server = Server(
        recorder.on_connect, recorder.on_receive, recorder.on_disconnect, separator=separator
    )
    server.serve(0, pool_size=pool_size)
    return server


class TestLoopback:
    def test_ping_received_once(self, server_recorder):
        with start_server(server_recorder) as server:
            client_rec = Recorder()
            client = Client(client_rec.on_connect, client_rec.on_receive, client_rec.on_disconnect)
            conn = client.connect("127.0.0.1", server.port)
            assert client_rec.connects == 1  # on_connect fires synchronously
            conn.send(b"ping")
            assert server_recorder.wait_for(lambda r: r.messages == [b"ping"])
            client.close()
            assert server_recorder.wait_for(lambda r: r.disconnects == 1)
            assert server_recorder.messages == [b"ping"]

    def test_broadcast_reaches_all_clients(self, server_recorder):
        with start_server(server_recorder) as server:
            rec_a, rec_b = Recorder(), Recorder()
            client_a = Client(None, rec_a.on_receive, None)
            client_b = Client(None, rec_b.on_receive, None)
            client_a.connect("127.0.0.1", server.port)
            client_b.connect("127.0.0.1", server.port)
            assert server_recorder.wait_for(lambda r: r.connects == 2)
            server.broadcast(b"x")
            assert rec_a.wait_for(lambda r: r.messages == [b"x"])
            assert rec_b.wait_for(lambda r: r.messages == [b"x"])
            client_a.close()
            client_b.close()

    def test_disconnect_fires_exactly_once(self, server_recorder):
        with start_server(server_recorder) as server:
            client = Client()
            client.connect("127.0.0.1", server.port)
            assert server_recorder.wait_for(lambda r: r.connects == 1)
            client.close()
            assert server_recorder.wait_for(lambda r: r.disconnects == 1)
            time.sleep(0.1)  # give any duplicate a chance to fire
        assert server_recorder.disconnects == 1

    def test_server_push_to_specific_client(self, server_recorder):
        with start_server(server_recorder) as server:
            rec_a, rec_b = Recorder(), Recorder()
            client_a = Client(None, rec_a.on_receive, None)
            client_b = Client(None, rec_b.on_receive, None)
            client_a.connect("127.0.0.1", server.port)
            assert server_recorder.wait_for(lambda r: r.connects == 1)
            first = server.connections[0]
            client_b.connect("127.0.0.1", server.port)
            assert server_recorder.wait_for(lambda r: r.connects == 2)
            first.send(b"direct")
            assert rec_a.wait_for(lambda r: r.messages == [b"direct"])
            time.sleep(0.1)
            assert rec_b.messages == []
            client_a.close()
            client_b.close()

    def test_thousand_messages_in_order(self, server_recorder):
        with start_server(server_recorder, pool_size=4) as server:
            client = Client()
            conn = client.connect("127.0.0.1", server.port)
            expected = [f"m{i}".encode() for i in range(1000)]
            for message in expected:
                conn.send(message)
            assert server_recorder.wait_for(lambda r: len(r.messages) == 1000)
            assert server_recorder.messages == expected
            client.close()

    def test_connect_to_dead_port_raises(self):
        probe = Server()
        probe.serve(0)
        dead_port = probe.port
        probe.close()
        client = Client()
        with pytest.raises(TransportError):
            client.connect("127.0.0.1", dead_port)

    def test_bind_conflict_raises(self, server_recorder):
        with start_server(server_recorder) as server:
            other = Server()
            with pytest.raises(TransportError):
                other.serve(server.port)

    def test_pool_size_validated(self):
        with pytest.raises(TransportError):
            Server().serve(0, pool_size=0)

    def test_custom_separator_end_to_end(self, server_recorder):
        with start_server(server_recorder, separator=b"|") as server:
            client = Client(separator=b"|")
            conn = client.connect("127.0.0.1", server.port)
            conn.send(b"semi;colons;inside")
            assert server_recorder.wait_for(lambda r: r.messages == [b"semi;colons;inside"])
            client.close()


class TestPerConnectionSerialization:
    def test_single_connection_callbacks_never_overlap(self, server_recorder):
        active = []
        overlaps = []
        lock = threading.Lock()

        def slow_receive(conn, message):
            with lock:
                if active:
                    overlaps.append(message)
                active.append(message)
            time.sleep(0.002)
            with lock:
                active.remove(message)

        server = Server(None, slow_receive, None)
        server.serve(0, pool_size=4)
        try:
            client = Client()
            conn = client.connect("127.0.0.1", server.port)
            for i in range(100):
                conn.send(f"{i}".encode())
            deadline = time.monotonic() + TIMEOUT
            while time.monotonic() < deadline and active:
                time.sleep(0.01)
            time.sleep(0.3)
            assert overlaps == []
            client.close()
        finally:
            server.close()


class TestSerial:
    def test_pipe_messages_delivered_in_order(self):
        near, far = memory_stream_pair()
        recorder = Recorder()
        serial_connection(near, recorder.on_connect, recorder.on_receive, recorder.on_disconnect)
        assert recorder.connects == 1
        far.write(b"a;b;")
        assert recorder.wait_for(lambda r: r.messages == [b"a", b"b"])

    def test_send_reaches_far_end_framed(self):
        near, far = memory_stream_pair()
        conn = serial_connection(near)
        conn.send(b"hello")
        assert far.read(64) == b"hello;"

    def test_far_close_fires_disconnect(self):
        near, far = memory_stream_pair()
        recorder = Recorder()
        serial_connection(near, None, recorder.on_receive, recorder.on_disconnect)
        far.close()
        assert recorder.wait_for(lambda r: r.disconnects == 1)
        time.sleep(0.05)
        assert recorder.disconnects == 1

    def test_link_entity_close_joins_reader(self):
        near, far = memory_stream_pair()
        recorder = Recorder()
        link = SerialLink(None, recorder.on_receive, recorder.on_disconnect)
        link.open(near)
        link.close()
        assert recorder.disconnects == 1
