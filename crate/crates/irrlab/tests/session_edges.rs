//! Session behavior against misbehaving servers: stalled responses and
//! responses carrying GUIDs the client never issued.

use std::net::TcpListener;
use std::time::Duration;

use irrlab::testbed::protocol::{
    read_message, write_message, Guid, MessageKind, NetworkMessage, ProtocolError,
};
use irrlab::testbed::session::{run_session, SessionConfig};

fn config(port: u16, template: Vec<char>, timeout_ms: u64) -> SessionConfig {
    SessionConfig {
        rate_hz: 50.0,
        timeout: Duration::from_millis(timeout_ms),
        ..SessionConfig::new("127.0.0.1", port, template)
    }
}

#[test]
fn unresponsive_server_times_out_with_partial_results() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    // Accept and read but never answer.
    let server = std::thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        loop {
            match read_message(&mut stream) {
                Ok(m) if m.kind == MessageKind::Shutdown => return,
                Ok(_) => continue,
                Err(_) => return,
            }
        }
    });

    let report = run_session(&config(port, vec!['a', 'd', 'a'], 400)).unwrap();
    assert!(report.partial, "expected the progress timeout to fire");
    assert!(report.measurements.is_empty());
    server.join().unwrap();
}

#[test]
fn responses_with_unknown_guids_are_counted_and_never_measured() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    let server = std::thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut writer = stream.try_clone().unwrap();
        loop {
            match read_message(&mut stream) {
                Ok(m) if m.kind == MessageKind::Interaction => {
                    // Answer under a GUID the client never issued.
                    let bogus =
                        NetworkMessage::frame_result(m.interaction, Guid::random(), vec![0; 8]);
                    write_message(&mut writer, &bogus).unwrap();
                }
                Ok(m) if m.kind == MessageKind::Shutdown => {
                    write_message(&mut writer, &NetworkMessage::shutdown(m.id)).unwrap();
                    return;
                }
                Ok(_) => continue,
                Err(ProtocolError::ConnectionClosed) => return,
                Err(e) => panic!("stub server read failed: {e}"),
            }
        }
    });

    let report = run_session(&config(port, vec!['a', 'd'], 500)).unwrap();
    assert!(report.partial, "pending records can never complete");
    assert_eq!(report.protocol_errors, 2);
    assert!(report.measurements.is_empty());
    server.join().unwrap();
}
