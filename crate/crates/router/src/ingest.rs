//! Frame intake: the TCP frame server, a reference client, a latest-wins
//! mailbox and a directory source.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use thiserror::Error;
use warehouse_router_core::wire::{FrameFormat, FrameHeader, FrameMessage, ACK, FRAME_HEADER_LEN, NAK};
use warehouse_router_core::{Frame, DEFAULT_MM_PER_PX};

use crate::pnm::{decode_p6, encode_p6, PnmError};

pub const DEFAULT_INGEST_PORT: u16 = 5005;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error(transparent)]
    Pnm(#[from] PnmError),
    #[error("jpeg: {0}")]
    Jpeg(String),
    #[error(transparent)]
    Frame(#[from] warehouse_router_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("unsupported file type: {0}")]
    Unsupported(String),
}

/// Turns a message payload into a frame. JPEG support is pluggable.
pub trait FrameDecoder: Send + Sync {
    fn decode(&self, format: FrameFormat, payload: &[u8]) -> Result<Frame, DecodeError>;
}

/// Decodes P6 natively and JPEG through the `image` crate, then applies the
/// configured ground scale.
#[derive(Debug, Clone, Copy)]
pub struct StandardDecoder {
    pub mm_per_px: f64,
}

impl Default for StandardDecoder {
    fn default() -> Self {
        Self { mm_per_px: DEFAULT_MM_PER_PX }
    }
}

impl FrameDecoder for StandardDecoder {
    fn decode(&self, format: FrameFormat, payload: &[u8]) -> Result<Frame, DecodeError> {
        let frame = match format {
            FrameFormat::P6 => decode_p6(payload)?,
            FrameFormat::Jpeg => decode_jpeg(payload)?,
        };
        Ok(frame.with_scale(self.mm_per_px)?)
    }
}

pub fn decode_jpeg(data: &[u8]) -> Result<Frame, DecodeError> {
    let img = image::load_from_memory_with_format(data, image::ImageFormat::Jpeg)
        .map_err(|e| DecodeError::Jpeg(e.to_string()))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    Ok(Frame::new(w, h, img.into_raw(), DEFAULT_MM_PER_PX)?)
}

pub fn encode_jpeg(frame: &Frame, quality: u8) -> Result<Vec<u8>, DecodeError> {
    let mut out = Vec::new();
    image::codecs::jpeg::JpegEncoder::new_with_quality(&mut out, quality)
        .encode(frame.pixels(), frame.width(), frame.height(), image::ExtendedColorType::Rgb8)
        .map_err(|e| DecodeError::Jpeg(e.to_string()))?;
    Ok(out)
}

/// Receiver of decoded frames.
pub trait FrameSink: Send + Sync {
    fn deliver(&self, frame: Frame);
}

impl FrameSink for mpsc::Sender<Frame> {
    fn deliver(&self, frame: Frame) {
        let _ = self.send(frame);
    }
}

#[derive(Debug, Default)]
struct Slot {
    frame: Option<Frame>,
    seq: u64,
    replaced: u64,
    closed: bool,
}

/// Single-slot hand-off: a new frame replaces one that was not taken yet.
/// Putting never blocks.
#[derive(Debug, Default)]
pub struct Mailbox {
    slot: Mutex<Slot>,
    cv: Condvar,
}

impl Mailbox {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `frame` and returns its sequence number (starting at 1).
    pub fn put(&self, frame: Frame) -> u64 {
        let mut s = self.slot.lock().expect("mailbox lock");
        if s.frame.replace(frame).is_some() {
            s.replaced += 1;
        }
        s.seq += 1;
        let seq = s.seq;
        drop(s);
        self.cv.notify_all();
        seq
    }

    pub fn try_take(&self) -> Option<(u64, Frame)> {
        let mut s = self.slot.lock().expect("mailbox lock");
        let seq = s.seq;
        s.frame.take().map(|f| (seq, f))
    }

    /// Waits up to `timeout` for a frame. Returns `None` on timeout or after
    /// [`Mailbox::close`].
    pub fn take(&self, timeout: Duration) -> Option<(u64, Frame)> {
        let deadline = Instant::now() + timeout;
        let mut s = self.slot.lock().expect("mailbox lock");
        loop {
            if let Some(f) = s.frame.take() {
                return Some((s.seq, f));
            }
            if s.closed {
                return None;
            }
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return None;
            }
            s = self.cv.wait_timeout(s, left).expect("mailbox lock").0;
        }
    }

    pub fn close(&self) {
        self.slot.lock().expect("mailbox lock").closed = true;
        self.cv.notify_all();
    }

    /// Frames overwritten before anyone took them.
    pub fn replaced(&self) -> u64 {
        self.slot.lock().expect("mailbox lock").replaced
    }
}

impl FrameSink for Mailbox {
    fn deliver(&self, frame: Frame) {
        self.put(frame);
    }
}

#[derive(Debug, Default)]
pub struct IngestStats {
    pub frames: AtomicU64,
    pub naks: AtomicU64,
    pub connections: AtomicU64,
}

/// TCP server accepting framed images, one thread per connection.
pub struct FrameServer {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    stats: Arc<IngestStats>,
    accept: Option<JoinHandle<()>>,
}

impl FrameServer {
    pub fn bind(addr: impl ToSocketAddrs, decoder: Arc<dyn FrameDecoder>, sink: Arc<dyn FrameSink>) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let stats = Arc::new(IngestStats::default());
        let (sd, st) = (shutdown.clone(), stats.clone());
        let accept = std::thread::Builder::new().name("frame-accept".into()).spawn(move || {
            for conn in listener.incoming() {
                if sd.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = conn else { continue };
                st.connections.fetch_add(1, Ordering::Relaxed);
                let (decoder, sink, st, sd) = (decoder.clone(), sink.clone(), st.clone(), sd.clone());
                let _ = std::thread::Builder::new().name("frame-conn".into()).spawn(move || {
                    if let Err(e) = serve_connection(stream, &*decoder, &*sink, &st, &sd) {
                        log::debug!("frame connection ended: {e}");
                    }
                });
            }
        })?;
        Ok(Self { addr, shutdown, stats, accept: Some(accept) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }

    pub fn shutdown(&mut self) {
        if self.shutdown.swap(true, Ordering::SeqCst) {
            return;
        }
        // Wake the accept loop.
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for FrameServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Reads exactly `buf.len()` bytes, polling the shutdown flag while idle.
/// `Ok(false)` means the peer closed before the first byte.
pub(crate) fn read_full(stream: &mut TcpStream, buf: &mut [u8], shutdown: &AtomicBool) -> io::Result<bool> {
    let mut got = 0;
    while got < buf.len() {
        match stream.read(&mut buf[got..]) {
            Ok(0) if got == 0 => return Ok(false),
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => got += n,
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut | io::ErrorKind::Interrupted) => {
                if shutdown.load(Ordering::SeqCst) {
                    return Err(io::ErrorKind::ConnectionAborted.into());
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

fn serve_connection(
    mut stream: TcpStream,
    decoder: &dyn FrameDecoder,
    sink: &dyn FrameSink,
    stats: &IngestStats,
    shutdown: &AtomicBool,
) -> io::Result<()> {
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(Duration::from_millis(200)))?;
    loop {
        let mut head = [0u8; FRAME_HEADER_LEN];
        if !read_full(&mut stream, &mut head, shutdown)? {
            return Ok(());
        }
        let header = match FrameHeader::decode(&head) {
            Ok(h) => h,
            Err(e) => {
                stats.naks.fetch_add(1, Ordering::Relaxed);
                stream.write_all(&[NAK])?;
                return Err(io::Error::new(io::ErrorKind::InvalidData, e));
            }
        };
        let mut payload = vec![0u8; header.length as usize];
        if !read_full(&mut stream, &mut payload, shutdown)? && !payload.is_empty() {
            return Err(io::ErrorKind::UnexpectedEof.into());
        }
        match decoder.decode(header.format, &payload) {
            Ok(frame) => {
                sink.deliver(frame);
                stats.frames.fetch_add(1, Ordering::Relaxed);
                stream.write_all(&[ACK])?;
            }
            Err(e) => {
                log::warn!("dropping undecodable frame: {e}");
                stats.naks.fetch_add(1, Ordering::Relaxed);
                stream.write_all(&[NAK])?;
            }
        }
    }
}

/// Client side of the frame link.
pub struct FrameClient {
    stream: TcpStream,
}

impl FrameClient {
    pub fn connect(addr: impl ToSocketAddrs, timeout: Duration) -> io::Result<Self> {
        let addr = addr
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "no address"))?;
        let stream = TcpStream::connect_timeout(&addr, timeout)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(timeout))?;
        stream.set_write_timeout(Some(timeout))?;
        Ok(Self { stream })
    }

    /// Sends one message and returns the reply byte.
    pub fn send(&mut self, msg: &FrameMessage) -> io::Result<u8> {
        let bytes = msg.encode().map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        self.send_raw(&bytes)
    }

    pub fn send_frame(&mut self, frame: &Frame) -> io::Result<u8> {
        self.send(&FrameMessage::new(FrameFormat::P6, encode_p6(frame)))
    }

    /// Writes raw bytes and reads the one-byte reply.
    pub fn send_raw(&mut self, bytes: &[u8]) -> io::Result<u8> {
        self.stream.write_all(bytes)?;
        let mut r = [0u8; 1];
        self.stream.read_exact(&mut r)?;
        Ok(r[0])
    }

    pub fn stream(&mut self) -> &mut TcpStream {
        &mut self.stream
    }
}

fn is_image(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("ppm" | "pnm" | "jpg" | "jpeg")
    )
}

pub fn read_image(path: &Path) -> Result<Frame, DecodeError> {
    let data = std::fs::read(path)?;
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("ppm" | "pnm") => Ok(decode_p6(&data)?),
        Some("jpg" | "jpeg") => decode_jpeg(&data),
        _ => Err(DecodeError::Unsupported(path.display().to_string())),
    }
}

/// Image files of a directory in lexicographic order, or the single file
/// given. Each item carries its own decode result.
pub fn file_source(path: &Path) -> io::Result<impl Iterator<Item = (PathBuf, Result<Frame, DecodeError>)>> {
    let mut paths = if path.is_dir() {
        let mut v = Vec::new();
        for e in std::fs::read_dir(path)? {
            let p = e?.path();
            if p.is_file() && is_image(&p) {
                v.push(p);
            }
        }
        v
    } else {
        vec![path.to_path_buf()]
    };
    paths.sort();
    Ok(paths.into_iter().map(|p| {
        let r = read_image(&p);
        (p, r)
    }))
}
