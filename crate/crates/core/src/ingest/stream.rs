//! Live frame ingestion over UDP and paced replay of recordings.
//!
//! One datagram carries exactly one frame line. The recording header is
//! agreed out of band; the only control payload is [`END_OF_STREAM`], which
//! closes a listening session.

use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{sync_channel, Receiver};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::skeleton::SkeletonDescriptor;

use super::format::{format_frame_line, parse_frame_line, ParseOptions};
use super::{MotionFrame, Recording};

/// Largest UDP payload over IPv4.
pub const MAX_DATAGRAM: usize = 65507;
pub const END_OF_STREAM: &str = "#end";

const POLL_INTERVAL: Duration = Duration::from_millis(20);
const RECV_BUFFER: usize = 4 << 20;

/// Consumer of an ordered frame stream.
pub trait FrameSink {
    fn deliver(&mut self, frame: MotionFrame) -> Result<()>;
}

impl<F> FrameSink for F
where
    F: FnMut(MotionFrame) -> Result<()>,
{
    fn deliver(&mut self, frame: MotionFrame) -> Result<()> {
        self(frame)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Speed {
    /// As fast as the sink accepts frames.
    Unlimited,
    /// Wall-clock multiplier on recorded time, must be positive.
    Factor(f64),
}

/// Delivers the frames of `rec` in order, pacing them by their timestamps.
/// Returns the number of frames delivered.
pub fn replay(rec: &Recording, speed: Speed, sink: &mut impl FrameSink) -> Result<usize> {
    if let Speed::Factor(s) = speed {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::contract(format!("replay speed must be positive, got {s}")));
        }
    }
    let Some(t0) = rec.frames.first().map(|f| f.t) else {
        return Ok(0);
    };
    let start = Instant::now();
    for frame in &rec.frames {
        if let Speed::Factor(s) = speed {
            let due = start + Duration::from_secs_f64((frame.t - t0) / s);
            let now = Instant::now();
            if due > now {
                thread::sleep(due - now);
            }
        }
        sink.deliver(frame.clone())?;
    }
    Ok(rec.frames.len())
}

/// Replays `rec` as datagrams to `target`, followed by the end marker.
pub fn send_recording(rec: &Recording, target: SocketAddr, speed: Speed) -> Result<usize> {
    let local: SocketAddr = if target.is_ipv4() { "0.0.0.0:0" } else { "[::]:0" }.parse().expect("literal address");
    let socket = UdpSocket::bind(local)?;
    let mut sink = |frame: MotionFrame| -> Result<()> {
        let line = format_frame_line(&frame);
        if line.len() > MAX_DATAGRAM {
            return Err(Error::data(format!("frame at t={} exceeds datagram size", frame.t)));
        }
        socket.send_to(line.as_bytes(), target)?;
        Ok(())
    };
    let n = replay(rec, speed, &mut sink)?;
    socket.send_to(END_OF_STREAM.as_bytes(), target)?;
    Ok(n)
}

#[derive(Debug, Clone)]
pub struct StreamOptions {
    pub parse: ParseOptions,
    /// Bound on frames buffered between the socket reader and the sink.
    pub queue_capacity: usize,
    /// Close the session after this long without any datagram.
    pub idle_timeout: Option<Duration>,
    /// Close the session once this many frames were delivered.
    pub max_frames: Option<u64>,
    /// Sampling rate of the sender; enables counting lost frames from
    /// timestamp gaps.
    pub nominal_rate: Option<f64>,
}

impl Default for StreamOptions {
    fn default() -> Self {
        StreamOptions {
            parse: ParseOptions::default(),
            queue_capacity: 1024,
            idle_timeout: None,
            max_frames: None,
            nominal_rate: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StreamStats {
    /// Datagrams received, excluding the end marker.
    pub received: u64,
    pub delivered: u64,
    /// Frames discarded because their timestamp was not newer than the last
    /// accepted one.
    pub dropped: u64,
    /// Frames missing between accepted ones, inferred from timestamp gaps
    /// at the nominal rate (0 when no rate is configured).
    pub lost: u64,
    pub malformed: u64,
}

pub struct StreamSession {
    socket: UdpSocket,
    desc: Arc<SkeletonDescriptor>,
    opts: StreamOptions,
    stop: Arc<AtomicBool>,
}

impl StreamSession {
    pub fn bind(addr: impl ToSocketAddrs, desc: Arc<SkeletonDescriptor>, opts: StreamOptions) -> Result<Self> {
        let socket = UdpSocket::bind(addr)?;
        socket.set_read_timeout(Some(POLL_INTERVAL))?;
        // Best effort: the kernel caps the request at its configured maximum.
        let _ = socket2::SockRef::from(&socket).set_recv_buffer_size(RECV_BUFFER);
        Ok(StreamSession { socket, desc, opts, stop: Arc::new(AtomicBool::new(false)) })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.socket.local_addr()?)
    }

    /// Setting the flag closes the session at the next poll.
    pub fn stop_handle(&self) -> Arc<AtomicBool> {
        Arc::clone(&self.stop)
    }

    /// Runs until the end marker, the idle timeout, `max_frames`, a stop
    /// request or a sink error. Frames reach the sink in arrival order.
    ///
    /// The socket reader only moves datagrams into the queue; decoding and
    /// ordering checks run on the consumer side so a slow sink or parser
    /// does not starve the kernel receive buffer.
    pub fn run(self, sink: &mut impl FrameSink) -> Result<StreamStats> {
        let StreamSession { socket, desc, opts, stop } = self;
        let (tx, rx) = sync_channel::<Vec<u8>>(opts.queue_capacity.max(1));
        let reader_stop = Arc::clone(&stop);
        let idle = opts.idle_timeout;
        let reader = thread::spawn(move || -> std::io::Result<u64> {
            let mut received = 0u64;
            let mut buf = vec![0u8; 65536];
            let mut last_seen = Instant::now();
            while !reader_stop.load(Ordering::Relaxed) {
                let n = match socket.recv_from(&mut buf) {
                    Ok((n, _)) => n,
                    Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {
                        if idle.is_some_and(|d| last_seen.elapsed() >= d) {
                            break;
                        }
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                last_seen = Instant::now();
                let payload = &buf[..n];
                if payload == END_OF_STREAM.as_bytes() {
                    break;
                }
                received += 1;
                if tx.send(payload.to_vec()).is_err() {
                    break;
                }
            }
            Ok(received)
        });

        let mut counts = Counts::default();
        let consumed = consume(&rx, sink, &desc, &opts, &mut counts);
        stop.store(true, Ordering::Relaxed);
        drop(rx);
        let received = reader.join().map_err(|_| Error::data("stream reader thread panicked"))??;
        consumed?;
        Ok(StreamStats {
            received,
            delivered: counts.delivered,
            dropped: counts.dropped,
            lost: counts.lost,
            malformed: counts.malformed,
        })
    }
}

#[derive(Debug, Default)]
struct Counts {
    delivered: u64,
    dropped: u64,
    lost: u64,
    malformed: u64,
}

fn consume(
    rx: &Receiver<Vec<u8>>,
    sink: &mut impl FrameSink,
    desc: &SkeletonDescriptor,
    opts: &StreamOptions,
    counts: &mut Counts,
) -> Result<()> {
    if opts.max_frames == Some(0) {
        return Ok(());
    }
    let rate = opts.nominal_rate.filter(|r| *r > 0.0 && r.is_finite());
    let mut last_t: Option<f64> = None;
    for payload in rx.iter() {
        let frame =
            std::str::from_utf8(&payload).ok().and_then(|line| parse_frame_line(line, desc, &opts.parse, 1).ok());
        let Some(frame) = frame else {
            counts.malformed += 1;
            continue;
        };
        if last_t.is_some_and(|t| !(frame.t > t)) {
            counts.dropped += 1;
            continue;
        }
        if let (Some(r), Some(prev)) = (rate, last_t) {
            let slots = ((frame.t - prev) * r).round();
            if slots > 1.0 {
                counts.lost += slots as u64 - 1;
            }
        }
        last_t = Some(frame.t);
        sink.deliver(frame)?;
        counts.delivered += 1;
        if opts.max_frames.is_some_and(|m| counts.delivered >= m) {
            break;
        }
    }
    Ok(())
}

/// Binds `port` on all interfaces and runs a session to completion.
pub fn listen_stream(
    port: u16,
    desc: Arc<SkeletonDescriptor>,
    sink: &mut impl FrameSink,
    opts: StreamOptions,
) -> Result<StreamStats> {
    StreamSession::bind(("0.0.0.0", port), desc, opts)?.run(sink)
}
