//! Data-block dispatch to PLC-style controllers and a mock controller.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use thiserror::Error;
use warehouse_router_core::wire::{
    encode_motion, BlockHeader, DataBlockRead, DataBlockWrite, WireError, ACK, BLOCK_HEADER_LEN, NAK,
};
use warehouse_router_core::MotionVector;

use crate::ingest::read_full;

pub const DEFAULT_PLC_PORT: u16 = 1102;
/// Size of every block in the mock controller.
pub const MOCK_BLOCK_SIZE: usize = 1024;

#[derive(Debug, Error)]
pub enum PlcError {
    #[error("connection failed: {0}")]
    Connect(io::Error),
    #[error("timed out waiting for the controller")]
    Timeout,
    #[error("controller rejected the request")]
    Nak,
    #[error("unexpected reply byte {0:#04x}")]
    BadReply(u8),
    #[error(transparent)]
    Io(io::Error),
    #[error(transparent)]
    Wire(#[from] WireError),
}

impl PlcError {
    /// Whether retrying the same request may succeed.
    pub fn is_retriable(&self) -> bool {
        !matches!(self, PlcError::Wire(_))
    }
}

impl From<io::Error> for PlcError {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => PlcError::Timeout,
            _ => PlcError::Io(e),
        }
    }
}

/// One persistent connection; requests on it are strictly ordered.
pub struct PlcConnection {
    stream: TcpStream,
}

impl PlcConnection {
    pub fn connect(addr: impl ToSocketAddrs, timeout: Duration) -> Result<Self, PlcError> {
        let addr = addr
            .to_socket_addrs()
            .map_err(PlcError::Connect)?
            .next()
            .ok_or_else(|| PlcError::Connect(io::Error::new(io::ErrorKind::InvalidInput, "no address")))?;
        let stream = TcpStream::connect_timeout(&addr, timeout).map_err(PlcError::Connect)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(timeout))?;
        stream.set_write_timeout(Some(timeout))?;
        Ok(Self { stream })
    }

    fn reply(&mut self) -> Result<(), PlcError> {
        let mut r = [0u8; 1];
        self.stream.read_exact(&mut r)?;
        match r[0] {
            ACK => Ok(()),
            NAK => Err(PlcError::Nak),
            b => Err(PlcError::BadReply(b)),
        }
    }

    pub fn write_block(&mut self, db: u16, start: u16, payload: &[u8]) -> Result<(), PlcError> {
        let msg = DataBlockWrite { db, start, payload: payload.to_vec() }.encode()?;
        self.stream.write_all(&msg)?;
        self.reply()
    }

    pub fn read_block(&mut self, db: u16, start: u16, count: u16) -> Result<Vec<u8>, PlcError> {
        self.stream.write_all(&DataBlockRead { db, start, count }.encode())?;
        self.reply()?;
        let mut out = vec![0u8; count as usize];
        self.stream.read_exact(&mut out)?;
        Ok(out)
    }

    pub fn write_motion(&mut self, db: u16, start: u16, vectors: &[MotionVector]) -> Result<(), PlcError> {
        self.write_block(db, start, &encode_motion(vectors)?)
    }
}

/// Writes motion vectors to `db` at `offset` over a fresh connection.
pub fn plc_write(addr: &str, db: u16, offset: u16, vectors: &[MotionVector], timeout: Duration) -> Result<(), PlcError> {
    PlcConnection::connect(addr, timeout)?.write_motion(db, offset, vectors)
}

pub fn plc_read(addr: &str, db: u16, offset: u16, count: u16, timeout: Duration) -> Result<Vec<u8>, PlcError> {
    PlcConnection::connect(addr, timeout)?.read_block(db, offset, count)
}

type Block = Arc<Mutex<Vec<u8>>>;

#[derive(Debug, Default)]
struct Store {
    blocks: Mutex<BTreeMap<u16, Block>>,
    writes: AtomicU64,
    naks: AtomicU64,
}

impl Store {
    fn block(&self, db: u16) -> Block {
        self.blocks
            .lock()
            .expect("store lock")
            .entry(db)
            .or_insert_with(|| Arc::new(Mutex::new(vec![0u8; MOCK_BLOCK_SIZE])))
            .clone()
    }
}

/// In-memory controller speaking DBW1/DBR1. Blocks are created on first use
/// and writes to one block are serialized.
pub struct MockPlcServer {
    addr: SocketAddr,
    store: Arc<Store>,
    shutdown: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl MockPlcServer {
    pub fn bind(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let store = Arc::new(Store::default());
        let shutdown = Arc::new(AtomicBool::new(false));
        let (st, sd) = (store.clone(), shutdown.clone());
        let accept = std::thread::Builder::new().name("plc-accept".into()).spawn(move || {
            for conn in listener.incoming() {
                if sd.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = conn else { continue };
                let (st, sd) = (st.clone(), sd.clone());
                let _ = std::thread::Builder::new().name("plc-conn".into()).spawn(move || {
                    if let Err(e) = serve_plc(stream, &st, &sd) {
                        log::debug!("plc connection ended: {e}");
                    }
                });
            }
        })?;
        Ok(Self { addr, store, shutdown, accept: Some(accept) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Snapshot of a block; `None` if it was never touched.
    pub fn block(&self, db: u16) -> Option<Vec<u8>> {
        let b = self.store.blocks.lock().expect("store lock").get(&db).cloned();
        b.map(|b| b.lock().expect("block lock").clone())
    }

    pub fn writes(&self) -> u64 {
        self.store.writes.load(Ordering::SeqCst)
    }

    pub fn naks(&self) -> u64 {
        self.store.naks.load(Ordering::SeqCst)
    }

    pub fn shutdown(&mut self) {
        if self.shutdown.swap(true, Ordering::SeqCst) {
            return;
        }
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for MockPlcServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn in_range(start: u16, count: u16) -> bool {
    start as usize + count as usize <= MOCK_BLOCK_SIZE
}

fn serve_plc(mut stream: TcpStream, store: &Store, shutdown: &AtomicBool) -> io::Result<()> {
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(Duration::from_millis(200)))?;
    loop {
        let mut head = [0u8; BLOCK_HEADER_LEN];
        if !read_full(&mut stream, &mut head, shutdown)? {
            return Ok(());
        }
        let h = match BlockHeader::decode(&head) {
            Ok(h) => h,
            Err(e) => {
                store.naks.fetch_add(1, Ordering::SeqCst);
                stream.write_all(&[NAK])?;
                return Err(io::Error::new(io::ErrorKind::InvalidData, e));
            }
        };
        if h.is_write() {
            let mut payload = vec![0u8; h.count as usize];
            if !read_full(&mut stream, &mut payload, shutdown)? && !payload.is_empty() {
                return Err(io::ErrorKind::UnexpectedEof.into());
            }
            if !in_range(h.start, h.count) {
                store.naks.fetch_add(1, Ordering::SeqCst);
                stream.write_all(&[NAK])?;
                continue;
            }
            let block = store.block(h.db);
            {
                let mut b = block.lock().expect("block lock");
                b[h.start as usize..h.start as usize + h.count as usize].copy_from_slice(&payload);
            }
            store.writes.fetch_add(1, Ordering::SeqCst);
            stream.write_all(&[ACK])?;
        } else {
            if !in_range(h.start, h.count) {
                store.naks.fetch_add(1, Ordering::SeqCst);
                stream.write_all(&[NAK])?;
                continue;
            }
            let block = store.block(h.db);
            let mut reply = Vec::with_capacity(1 + h.count as usize);
            reply.push(ACK);
            reply.extend_from_slice(&block.lock().expect("block lock")[h.start as usize..h.start as usize + h.count as usize]);
            stream.write_all(&reply)?;
        }
    }
}
