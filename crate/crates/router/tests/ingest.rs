use std::io::Read;
use std::sync::atomic::Ordering;
use std::sync::{mpsc, Arc};
use std::time::Duration;

use warehouse_router::ingest::{encode_jpeg, FrameClient, FrameServer, Mailbox, StandardDecoder};
use warehouse_router::pnm::encode_p6;
use warehouse_router_core::wire::{FrameFormat, FrameMessage, ACK, NAK};
use warehouse_router_core::Frame;

fn numbered(i: u32) -> Frame {
    let mut f = Frame::filled(64, 48, [0, 0, 0]).unwrap();
    f.set_pixel(0, 0, [(i >> 16) as u8, (i >> 8) as u8, i as u8]);
    f.set_pixel(63, 47, [7, 7, 7]);
    f
}

fn number(f: &Frame) -> u32 {
    let [a, b, c] = f.pixel(0, 0);
    (a as u32) << 16 | (b as u32) << 8 | c as u32
}

#[test]
fn three_hundred_frames_arrive_in_order() {
    let (tx, rx) = mpsc::channel();
    let server = FrameServer::bind("127.0.0.1:0", Arc::new(StandardDecoder::default()), Arc::new(tx)).unwrap();
    let mut client = FrameClient::connect(server.local_addr(), Duration::from_secs(5)).unwrap();
    for i in 0..300 {
        assert_eq!(client.send_frame(&numbered(i)).unwrap(), ACK);
    }
    let got: Vec<u32> = (0..300).map(|_| number(&rx.recv_timeout(Duration::from_secs(5)).unwrap())).collect();
    assert_eq!(got, (0..300).collect::<Vec<_>>());
    let f = numbered(0);
    assert_eq!((f.width(), f.height(), f.pixel(63, 47)), (64, 48, [7, 7, 7]));
    assert_eq!(server.stats().frames.load(Ordering::SeqCst), 300);
}

#[test]
fn p6_payload_is_decoded_exactly() {
    let (tx, rx) = mpsc::channel();
    let server = FrameServer::bind("127.0.0.1:0", Arc::new(StandardDecoder::default()), Arc::new(tx)).unwrap();
    let mut client = FrameClient::connect(server.local_addr(), Duration::from_secs(5)).unwrap();
    let mut f = Frame::filled(64, 48, [1, 2, 3]).unwrap();
    f.fill_rect(10, 10, 20, 30, [200, 100, 50]);
    assert_eq!(client.send(&FrameMessage::new(FrameFormat::P6, encode_p6(&f))).unwrap(), ACK);
    let got = rx.recv_timeout(Duration::from_secs(5)).unwrap();
    assert_eq!(got.pixels(), f.pixels());
    assert_eq!(got.mm_per_px(), f.mm_per_px());
}

#[test]
fn jpeg_payload_is_decoded() {
    let (tx, rx) = mpsc::channel();
    let server = FrameServer::bind("127.0.0.1:0", Arc::new(StandardDecoder::default()), Arc::new(tx)).unwrap();
    let mut client = FrameClient::connect(server.local_addr(), Duration::from_secs(5)).unwrap();
    let f = Frame::filled(32, 16, [120, 60, 30]).unwrap();
    let msg = FrameMessage::new(FrameFormat::Jpeg, encode_jpeg(&f, 95).unwrap());
    assert_eq!(client.send(&msg).unwrap(), ACK);
    let got = rx.recv_timeout(Duration::from_secs(5)).unwrap();
    assert_eq!((got.width(), got.height()), (32, 16));
}

#[test]
fn wrong_magic_is_nak_and_closes() {
    let (tx, _rx) = mpsc::channel();
    let server = FrameServer::bind("127.0.0.1:0", Arc::new(StandardDecoder::default()), Arc::new(tx)).unwrap();
    let mut client = FrameClient::connect(server.local_addr(), Duration::from_secs(5)).unwrap();
    assert_eq!(client.send_raw(b"FRM2\0\0\0\0\0").unwrap(), NAK);
    let mut rest = Vec::new();
    client.stream().read_to_end(&mut rest).unwrap();
    assert!(rest.is_empty());
    assert_eq!(server.stats().naks.load(Ordering::SeqCst), 1);
}

#[test]
fn undecodable_payload_is_nak_but_connection_survives() {
    let (tx, rx) = mpsc::channel();
    let server = FrameServer::bind("127.0.0.1:0", Arc::new(StandardDecoder::default()), Arc::new(tx)).unwrap();
    let mut client = FrameClient::connect(server.local_addr(), Duration::from_secs(5)).unwrap();
    assert_eq!(client.send(&FrameMessage::new(FrameFormat::P6, b"P6 garbage".to_vec())).unwrap(), NAK);
    assert_eq!(client.send_frame(&numbered(5)).unwrap(), ACK);
    assert_eq!(number(&rx.recv_timeout(Duration::from_secs(5)).unwrap()), 5);
}

#[test]
fn busy_pipeline_keeps_latest_frame() {
    let mailbox = Arc::new(Mailbox::new());
    let server = FrameServer::bind("127.0.0.1:0", Arc::new(StandardDecoder::default()), mailbox.clone()).unwrap();
    let mut client = FrameClient::connect(server.local_addr(), Duration::from_secs(5)).unwrap();
    // Nobody consumes, yet every send is acknowledged promptly.
    for i in 0..50 {
        assert_eq!(client.send_frame(&numbered(i)).unwrap(), ACK);
    }
    let (seq, f) = mailbox.try_take().unwrap();
    assert_eq!((seq, number(&f)), (50, 49));
    assert_eq!(mailbox.replaced(), 49);
    assert!(mailbox.try_take().is_none());
}

#[test]
fn concurrent_clients_are_all_served() {
    let (tx, rx) = mpsc::channel();
    let server = FrameServer::bind("127.0.0.1:0", Arc::new(StandardDecoder::default()), Arc::new(tx)).unwrap();
    let addr = server.local_addr();
    let handles: Vec<_> = (0..4)
        .map(|k| {
            std::thread::spawn(move || {
                let mut c = FrameClient::connect(addr, Duration::from_secs(5)).unwrap();
                for i in 0..25 {
                    assert_eq!(c.send_frame(&numbered(k * 1000 + i)).unwrap(), ACK);
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    let mut per_client: Vec<Vec<u32>> = vec![Vec::new(); 4];
    for _ in 0..100 {
        let n = number(&rx.recv_timeout(Duration::from_secs(5)).unwrap());
        per_client[(n / 1000) as usize].push(n % 1000);
    }
    for v in per_client {
        assert_eq!(v, (0..25).collect::<Vec<_>>());
    }
}
