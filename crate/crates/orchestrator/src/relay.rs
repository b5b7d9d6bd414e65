use std::io::{Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use empathd_appsim::wait_until;

/// TCP forwarder that holds every chunk for a fixed delay in both
/// directions, standing in for a wireless hop.
pub struct DelayRelay {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl DelayRelay {
    pub fn spawn(target: SocketAddr, delay: Duration) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let accept = thread::Builder::new()
            .name("relay-accept".into())
            .spawn(move || {
                while !flag.load(Ordering::Relaxed) {
                    match listener.accept() {
                        Ok((down, _)) => {
                            if let Err(e) = bridge(down, target, delay, flag.clone()) {
                                log::warn!("relay to {target} failed: {e}");
                            }
                        }
                        Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                            thread::sleep(Duration::from_millis(5));
                        }
                        Err(e) => {
                            log::warn!("relay accept: {e}");
                            thread::sleep(Duration::from_millis(5));
                        }
                    }
                }
            })?;
        Ok(DelayRelay {
            addr,
            stop,
            accept: Some(accept),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }
}

impl Drop for DelayRelay {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

fn bridge(down: TcpStream, target: SocketAddr, delay: Duration, stop: Arc<AtomicBool>) -> std::io::Result<()> {
    down.set_nonblocking(false)?;
    let up = TcpStream::connect(target)?;
    for s in [&down, &up] {
        s.set_nodelay(true)?;
    }
    pump(down.try_clone()?, up.try_clone()?, delay, stop.clone())?;
    pump(up, down, delay, stop)?;
    Ok(())
}

/// Reader thread timestamps chunks; writer thread releases each one when
/// its delay has elapsed.
fn pump(mut from: TcpStream, mut to: TcpStream, delay: Duration, stop: Arc<AtomicBool>) -> std::io::Result<()> {
    let (tx, rx) = mpsc::channel::<(Instant, Vec<u8>)>();
    from.set_read_timeout(Some(Duration::from_millis(50)))?;
    let from_shut = from.try_clone()?;
    thread::Builder::new().name("relay-read".into()).spawn(move || {
        let mut buf = vec![0u8; 64 * 1024];
        loop {
            match from.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => {
                    if tx.send((Instant::now() + delay, buf[..n].to_vec())).is_err() {
                        break;
                    }
                }
                Err(e)
                    if matches!(
                        e.kind(),
                        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
                    ) =>
                {
                    if stop.load(Ordering::Relaxed) {
                        break;
                    }
                }
                Err(_) => break,
            }
        }
    })?;
    thread::Builder::new().name("relay-write".into()).spawn(move || {
        for (due, chunk) in rx {
            wait_until(due);
            if to.write_all(&chunk).is_err() {
                let _ = from_shut.shutdown(Shutdown::Both);
                break;
            }
        }
        let _ = to.shutdown(Shutdown::Write);
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_takes_twice_the_delay() {
        let echo = TcpListener::bind("127.0.0.1:0").unwrap();
        let target = echo.local_addr().unwrap();
        thread::spawn(move || {
            let (mut s, _) = echo.accept().unwrap();
            let mut b = [0u8; 4];
            s.read_exact(&mut b).unwrap();
            s.write_all(&b).unwrap();
        });
        let relay = DelayRelay::spawn(target, Duration::from_millis(30)).unwrap();
        let mut c = TcpStream::connect(relay.local_addr()).unwrap();
        c.set_nodelay(true).unwrap();
        let t = Instant::now();
        c.write_all(b"ping").unwrap();
        let mut b = [0u8; 4];
        c.read_exact(&mut b).unwrap();
        let ms = t.elapsed().as_secs_f64() * 1e3;
        assert_eq!(&b, b"ping");
        assert!((60.0..75.0).contains(&ms), "{ms}");
    }

    #[test]
    fn closing_the_client_reaches_the_target() {
        let sink = TcpListener::bind("127.0.0.1:0").unwrap();
        let target = sink.local_addr().unwrap();
        let relay = DelayRelay::spawn(target, Duration::from_millis(5)).unwrap();
        let mut c = TcpStream::connect(relay.local_addr()).unwrap();
        let (mut s, _) = sink.accept().unwrap();
        c.write_all(b"abc").unwrap();
        drop(c);
        let mut got = Vec::new();
        s.read_to_end(&mut got).unwrap();
        assert_eq!(got, b"abc");
    }
}
