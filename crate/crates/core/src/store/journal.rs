//! Append-only JSON-lines journal. Every accepted write is one line; a line
//! is durable once `append` returns. On open, a partial trailing line (the
//! only thing a crash between writes can leave behind) is cut off.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::{Annotation, InteractionEvent, PoseSample, ScenarioKey, Screenshot, Widget};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case")]
pub(crate) enum Record {
    Scenario { scenario: ScenarioKey },
    Screenshot(Screenshot),
    Widget(Widget),
    Event(InteractionEvent),
    PoseSample(PoseSample),
    Annotation(Annotation),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SyncMode {
    /// `fsync` after every record.
    #[default]
    Full,
    /// Hand each record to the OS before returning. Survives a process kill,
    /// not a power loss.
    OsBuffered,
}

pub(crate) struct Journal {
    path: PathBuf,
    file: File,
    sync: SyncMode,
}

pub(crate) struct Replay {
    pub records: Vec<Record>,
    /// Bytes dropped from a torn trailing line.
    pub truncated_bytes: u64,
}

#[derive(Debug)]
pub(crate) enum ReplayError {
    Io(io::Error),
    Corrupt { line: usize, detail: String },
}

impl From<io::Error> for ReplayError {
    fn from(e: io::Error) -> Self {
        ReplayError::Io(e)
    }
}

impl Journal {
    pub fn open(path: &Path, sync: SyncMode) -> Result<(Self, Replay), ReplayError> {
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(path)?;
        let replay = read_records(&mut file)?;
        if replay.truncated_bytes > 0 {
            let keep = file.metadata()?.len() - replay.truncated_bytes;
            file.set_len(keep)?;
            file.sync_all()?;
        }
        file.seek(SeekFrom::End(0))?;
        Ok((
            Self {
                path: path.to_owned(),
                file,
                sync,
            },
            replay,
        ))
    }

    pub fn append(&mut self, record: &Record) -> io::Result<()> {
        let mut line = serde_json::to_vec(record).map_err(io::Error::other)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        if self.sync == SyncMode::Full {
            self.file.sync_data()?;
        }
        Ok(())
    }

    #[allow(dead_code)]
    pub fn path(&self) -> &Path {
        &self.path
    }
}

fn read_records(file: &mut File) -> Result<Replay, ReplayError> {
    file.seek(SeekFrom::Start(0))?;
    let mut reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            return Ok(Replay {
                records,
                truncated_bytes: 0,
            });
        }
        line_no += 1;
        let complete = buf.last() == Some(&b'\n');
        let parsed = serde_json::from_slice::<Record>(&buf);
        match (complete, parsed) {
            (true, Ok(record)) => records.push(record),
            (false, _) => {
                // torn tail: the final write never finished
                return Ok(Replay {
                    records,
                    truncated_bytes: n as u64,
                });
            }
            (true, Err(e)) => {
                let mut rest = Vec::new();
                std::io::Read::read_to_end(&mut reader, &mut rest)?;
                if rest.is_empty() {
                    // garbage in the final line also counts as torn
                    return Ok(Replay {
                        records,
                        truncated_bytes: n as u64,
                    });
                }
                return Err(ReplayError::Corrupt {
                    line: line_no,
                    detail: e.to_string(),
                });
            }
        }
    }
}
