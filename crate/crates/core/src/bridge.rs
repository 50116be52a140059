//! Framed-PNG bridge to an out-of-process cost-to-go estimator.
//!
//! Wire format: each side first sends the line `DC2G/1 256 256\n`, then the
//! client and server alternate frames of `[u32 big-endian length][PNG bytes]`.
//! One request is outstanding at a time per connection.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use image::RgbImage;

use crate::estimator::{CostToGoEstimator, EstimatorError, ESTIMATOR_IMAGE_SIZE};
use crate::semantic::{decode_png, encode_png};

pub const HANDSHAKE: &str = "DC2G/1 256 256\n";
/// Environment variable selecting the transport: `stdio` or `tcp:HOST:PORT`.
pub const BRIDGE_ENV: &str = "DC2G_BRIDGE";
/// Frames above this size are rejected before allocation.
pub const MAX_FRAME_BYTES: u32 = 64 << 20;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transport {
    Stdio,
    Tcp(String),
}

impl Transport {
    pub fn parse(s: &str) -> Result<Self, EstimatorError> {
        match s.trim() {
            "stdio" => Ok(Transport::Stdio),
            other => match other.strip_prefix("tcp:") {
                Some(addr) if !addr.is_empty() => Ok(Transport::Tcp(addr.to_string())),
                _ => Err(EstimatorError::Handshake(format!("unknown transport {other:?}"))),
            },
        }
    }

    /// Reads [`BRIDGE_ENV`]; unset means stdio.
    pub fn from_env() -> Result<Self, EstimatorError> {
        match std::env::var(BRIDGE_ENV) {
            Ok(v) => Self::parse(&v),
            Err(_) => Ok(Transport::Stdio),
        }
    }
}

pub fn write_frame<W: Write>(w: &mut W, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(payload.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

/// Reads one frame. `Ok(None)` on a clean end of stream before the length prefix.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Vec<u8>>, EstimatorError> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(EstimatorError::MalformedFrame("truncated length prefix".into())),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(len);
    if len == 0 {
        return Err(EstimatorError::MalformedFrame("zero-length frame".into()));
    }
    if len > MAX_FRAME_BYTES {
        return Err(EstimatorError::MalformedFrame(format!("frame of {len} bytes exceeds limit")));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => EstimatorError::MalformedFrame("truncated payload".into()),
        _ => e.into(),
    })?;
    Ok(Some(payload))
}

fn read_handshake<R: BufRead>(r: &mut R) -> Result<(), EstimatorError> {
    let mut line = Vec::new();
    r.by_ref().take(HANDSHAKE.len() as u64).read_until(b'\n', &mut line)?;
    if line != HANDSHAKE.as_bytes() {
        return Err(EstimatorError::Handshake(String::from_utf8_lossy(&line).into_owned()));
    }
    Ok(())
}

fn decode_frame(payload: &[u8]) -> Result<RgbImage, EstimatorError> {
    let img = decode_png(payload).map_err(|e| EstimatorError::MalformedFrame(e.to_string()))?;
    check_dims(&img)?;
    Ok(img)
}

fn check_dims(img: &RgbImage) -> Result<(), EstimatorError> {
    let (width, height) = img.dimensions();
    if (width, height) != (ESTIMATOR_IMAGE_SIZE, ESTIMATOR_IMAGE_SIZE) {
        return Err(EstimatorError::BadImageDims { width, height });
    }
    Ok(())
}

/// Serves `handler` on one connection until the peer closes it.
///
/// Returns `Ok` on a clean end of stream. Any protocol violation returns an
/// error without writing a response for the offending frame.
pub fn serve_bridge<E, R, W>(handler: &mut E, mut reader: R, mut writer: W) -> Result<(), EstimatorError>
where
    E: CostToGoEstimator + ?Sized,
    R: BufRead,
    W: Write,
{
    read_handshake(&mut reader)?;
    writer.write_all(HANDSHAKE.as_bytes())?;
    writer.flush()?;
    while let Some(payload) = read_frame(&mut reader)? {
        let request = decode_frame(&payload)?;
        let response = handler.estimate(&request)?;
        check_dims(&response)?;
        write_frame(&mut writer, &encode_png(&response))?;
    }
    Ok(())
}

/// Accepts connections on `addr` one after another, serving each to completion.
pub fn serve_tcp<E: CostToGoEstimator + ?Sized>(handler: &mut E, listener: TcpListener) -> Result<(), EstimatorError> {
    for stream in listener.incoming() {
        let stream = stream?;
        let reader = BufReader::new(stream.try_clone()?);
        serve_bridge(handler, reader, stream)?;
    }
    Ok(())
}

enum Incoming {
    Handshake(Result<(), EstimatorError>),
    Frame(Result<Vec<u8>, EstimatorError>),
}

/// Client end of the bridge. Implements [`CostToGoEstimator`].
///
/// A reader thread delivers responses so that each request can be bounded by
/// a timeout. After any error the connection is considered unusable and every
/// later call fails with `BrokenPipe`.
pub struct BridgeClient {
    writer: Option<Box<dyn Write + Send>>,
    incoming: Receiver<Incoming>,
    timeout: Duration,
    child: Option<Child>,
    socket: Option<TcpStream>,
    failed: bool,
}

impl BridgeClient {
    /// Handshakes over an arbitrary byte stream pair.
    pub fn new<R, W>(reader: R, writer: W, timeout: Duration) -> Result<Self, EstimatorError>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        Self::with_child(reader, Box::new(writer), timeout, None)
    }

    fn with_child<R: Read + Send + 'static>(
        reader: R,
        mut writer: Box<dyn Write + Send>,
        timeout: Duration,
        child: Option<Child>,
    ) -> Result<Self, EstimatorError> {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(reader);
            let hs = read_handshake(&mut reader);
            let ok = hs.is_ok();
            if tx.send(Incoming::Handshake(hs)).is_err() || !ok {
                return;
            }
            loop {
                let msg = match read_frame(&mut reader) {
                    Ok(Some(frame)) => Ok(frame),
                    Ok(None) => Err(EstimatorError::BrokenPipe("server closed the stream".into())),
                    Err(e) => Err(e),
                };
                let stop = msg.is_err();
                if tx.send(Incoming::Frame(msg)).is_err() || stop {
                    return;
                }
            }
        });
        let mut client = Self {
            writer: None,
            incoming: rx,
            timeout,
            child,
            socket: None,
            failed: false,
        };
        writer
            .write_all(HANDSHAKE.as_bytes())
            .and_then(|_| writer.flush())
            .map_err(|e| EstimatorError::BrokenPipe(e.to_string()))?;
        client.writer = Some(writer);
        match client.receive()? {
            Incoming::Handshake(r) => r?,
            Incoming::Frame(_) => unreachable!("handshake is always delivered first"),
        }
        Ok(client)
    }

    /// Spawns `program args..` and talks to it over its stdin/stdout.
    pub fn spawn(program: &str, args: &[String], timeout: Duration) -> Result<Self, EstimatorError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Self::with_child(stdout, Box::new(stdin), timeout, Some(child))
    }

    pub fn connect_tcp(addr: &str, timeout: Duration) -> Result<Self, EstimatorError> {
        let stream = TcpStream::connect(addr).map_err(|e| EstimatorError::BrokenPipe(format!("{addr}: {e}")))?;
        stream.set_nodelay(true)?;
        let reader = stream.try_clone()?;
        let handle = stream.try_clone()?;
        let mut client = Self::new(reader, stream, timeout)?;
        client.socket = Some(handle);
        Ok(client)
    }

    /// Connects per [`Transport`]: stdio spawns `command`, tcp ignores it.
    pub fn connect(transport: &Transport, command: &[String], timeout: Duration) -> Result<Self, EstimatorError> {
        match transport {
            Transport::Tcp(addr) => Self::connect_tcp(addr, timeout),
            Transport::Stdio => {
                let (program, args) = command
                    .split_first()
                    .ok_or_else(|| EstimatorError::BrokenPipe("no server command given for stdio bridge".into()))?;
                Self::spawn(program, args, timeout)
            }
        }
    }

    fn receive(&mut self) -> Result<Incoming, EstimatorError> {
        match self.incoming.recv_timeout(self.timeout) {
            Ok(msg) => Ok(msg),
            Err(RecvTimeoutError::Timeout) => {
                self.failed = true;
                Err(EstimatorError::Timeout(self.timeout.as_millis() as u64))
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.failed = true;
                Err(EstimatorError::BrokenPipe("reader stopped".into()))
            }
        }
    }

    fn request(&mut self, belief: &RgbImage) -> Result<RgbImage, EstimatorError> {
        if self.failed {
            return Err(EstimatorError::BrokenPipe("connection failed earlier".into()));
        }
        check_dims(belief)?;
        let writer = self.writer.as_mut().expect("writer present after handshake");
        write_frame(writer, &encode_png(belief)).map_err(|e| EstimatorError::BrokenPipe(e.to_string()))?;
        let payload = match self.receive()? {
            Incoming::Frame(frame) => frame?,
            Incoming::Handshake(_) => unreachable!("only one handshake is sent"),
        };
        decode_frame(&payload)
    }
}

impl CostToGoEstimator for BridgeClient {
    fn estimate(&mut self, belief: &RgbImage) -> Result<RgbImage, EstimatorError> {
        let out = self.request(belief);
        if out.is_err() {
            self.failed = true;
        }
        out
    }
}

impl Drop for BridgeClient {
    fn drop(&mut self) {
        // closing stdin lets a well-behaved server exit on its own
        self.writer = None;
        if let Some(socket) = self.socket.take() {
            let _ = socket.shutdown(std::net::Shutdown::Both);
        }
        if let Some(mut child) = self.child.take() {
            for _ in 0..50 {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// One connection shared by several users; requests are serialized.
#[derive(Clone)]
pub struct SharedBridge {
    inner: Arc<Mutex<BridgeClient>>,
}

impl SharedBridge {
    pub fn new(client: BridgeClient) -> Self {
        Self {
            inner: Arc::new(Mutex::new(client)),
        }
    }
}

impl CostToGoEstimator for SharedBridge {
    fn estimate(&mut self, belief: &RgbImage) -> Result<RgbImage, EstimatorError> {
        let mut client = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        client.estimate(belief)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{pipe, Cursor, PipeReader, PipeWriter};

    struct Echo;

    impl CostToGoEstimator for Echo {
        fn estimate(&mut self, belief: &RgbImage) -> Result<RgbImage, EstimatorError> {
            Ok(belief.clone())
        }
    }

    fn image(seed: u8) -> RgbImage {
        RgbImage::from_fn(256, 256, |x, y| image::Rgb([seed, (x % 256) as u8, (y % 7) as u8 * 30]))
    }

    /// Client and a server thread running `serve` on the other end of two pipes.
    fn pair<F>(serve: F) -> (BridgeClient, thread::JoinHandle<Result<(), EstimatorError>>)
    where
        F: FnOnce(BufReader<PipeReader>, PipeWriter) -> Result<(), EstimatorError> + Send + 'static,
    {
        let (c2s_r, c2s_w) = pipe().unwrap();
        let (s2c_r, s2c_w) = pipe().unwrap();
        let server = thread::spawn(move || serve(BufReader::new(c2s_r), s2c_w));
        let client = BridgeClient::new(s2c_r, c2s_w, Duration::from_secs(5)).unwrap();
        (client, server)
    }

    #[test]
    fn echo_roundtrip_in_order() {
        let (mut client, server) = pair(|r, w| serve_bridge(&mut Echo, r, w));
        for k in 0..3 {
            let img = image(k);
            assert_eq!(client.estimate(&img).unwrap(), img);
        }
        drop(client);
        server.join().unwrap().unwrap();
    }

    #[test]
    fn small_response_is_bad_dims() {
        let (mut client, _server) = pair(|mut r, mut w| {
            read_handshake(&mut r)?;
            w.write_all(HANDSHAKE.as_bytes())?;
            read_frame(&mut r)?;
            write_frame(&mut w, &encode_png(&RgbImage::new(100, 100)))?;
            Ok(())
        });
        assert!(matches!(
            client.estimate(&image(1)),
            Err(EstimatorError::BadImageDims { width: 100, height: 100 })
        ));
        assert!(matches!(client.estimate(&image(1)), Err(EstimatorError::BrokenPipe(_))));
    }

    #[test]
    fn garbage_response_is_malformed() {
        let (mut client, _server) = pair(|mut r, mut w| {
            read_handshake(&mut r)?;
            w.write_all(HANDSHAKE.as_bytes())?;
            read_frame(&mut r)?;
            write_frame(&mut w, b"not a png")?;
            Ok(())
        });
        assert!(matches!(client.estimate(&image(2)), Err(EstimatorError::MalformedFrame(_))));
    }

    #[test]
    fn silent_server_times_out() {
        let (c2s_r, c2s_w) = pipe().unwrap();
        let (s2c_r, mut s2c_w) = pipe().unwrap();
        let server = thread::spawn(move || {
            let mut r = BufReader::new(c2s_r);
            read_handshake(&mut r).unwrap();
            s2c_w.write_all(HANDSHAKE.as_bytes()).unwrap();
            let _ = read_frame(&mut r);
            thread::sleep(Duration::from_millis(300));
        });
        let mut client = BridgeClient::new(s2c_r, c2s_w, Duration::from_millis(50)).unwrap();
        assert!(matches!(client.estimate(&image(3)), Err(EstimatorError::Timeout(50))));
        server.join().unwrap();
    }

    #[test]
    fn server_rejects_bad_handshake_silently() {
        let mut out = Vec::new();
        let err = serve_bridge(&mut Echo, Cursor::new(b"DC2G/2 128 128\n".to_vec()), &mut out).unwrap_err();
        assert!(matches!(err, EstimatorError::Handshake(_)));
        assert!(out.is_empty());
    }

    #[test]
    fn server_fails_on_zero_length_frame() {
        let mut input = HANDSHAKE.as_bytes().to_vec();
        input.extend_from_slice(&0u32.to_be_bytes());
        let mut out = Vec::new();
        let err = serve_bridge(&mut Echo, Cursor::new(input), &mut out).unwrap_err();
        assert!(matches!(err, EstimatorError::MalformedFrame(_)));
        assert_eq!(out, HANDSHAKE.as_bytes());
    }

    #[test]
    fn server_transcript() {
        let mut input = HANDSHAKE.as_bytes().to_vec();
        let req = encode_png(&image(9));
        write_frame(&mut input, &req).unwrap();
        let mut out = Vec::new();
        serve_bridge(&mut Echo, Cursor::new(input), &mut out).unwrap();
        let mut expected = HANDSHAKE.as_bytes().to_vec();
        write_frame(&mut expected, &req).unwrap();
        assert_eq!(out, expected);
    }

    #[test]
    fn server_rejects_wrong_request_dims() {
        let mut input = HANDSHAKE.as_bytes().to_vec();
        write_frame(&mut input, &encode_png(&RgbImage::new(50, 50))).unwrap();
        let mut out = Vec::new();
        let err = serve_bridge(&mut Echo, Cursor::new(input), &mut out).unwrap_err();
        assert!(matches!(err, EstimatorError::BadImageDims { .. }));
        assert_eq!(out, HANDSHAKE.as_bytes());
    }

    #[test]
    fn transport_parsing() {
        assert_eq!(Transport::parse("stdio").unwrap(), Transport::Stdio);
        assert_eq!(Transport::parse("tcp:127.0.0.1:9000").unwrap(), Transport::Tcp("127.0.0.1:9000".into()));
        assert!(Transport::parse("udp:x").is_err());
        assert!(Transport::parse("tcp:").is_err());
    }

    #[test]
    fn tcp_roundtrip_with_shared_client() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let reader = BufReader::new(stream.try_clone().unwrap());
            serve_bridge(&mut Echo, reader, stream)
        });
        let shared = SharedBridge::new(BridgeClient::connect_tcp(&addr, Duration::from_secs(5)).unwrap());
        let handles: Vec<_> = (0..4u8)
            .map(|k| {
                let mut s = shared.clone();
                thread::spawn(move || s.estimate(&image(k)).unwrap() == image(k))
            })
            .collect();
        assert!(handles.into_iter().all(|h| h.join().unwrap()));
    }
}
