//! Line-delimited JSON sequence records and vocabulary/catalog files.
//!
//! One record per line:
//! `{"events":[{"t":0.5,"e":"a"},...],"labels":["y1",...]}`
//! where `labels` lists the labels that are positive.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{EventOccurrence, EventVocabulary, LabelCatalog, LabeledSequence, BEGIN_MARKER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    pub e: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub events: Vec<EventRecord>,
    pub labels: Vec<String>,
}

impl SequenceRecord {
    pub fn encode(seq: &LabeledSequence, vocab: &EventVocabulary, catalog: &LabelCatalog) -> Result<Self> {
        let events = seq
            .occurrences()
            .iter()
            .map(|o| Ok(EventRecord { t: o.time, e: vocab.symbol(o.event)?.to_string() }))
            .collect::<Result<Vec<_>>>()?;
        let labels = seq
            .labels()
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(j, _)| catalog.name(j).map(str::to_string))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { events, labels })
    }

    pub fn decode(&self, vocab: &EventVocabulary, catalog: &LabelCatalog) -> Result<LabeledSequence> {
        let mut occ = Vec::with_capacity(self.events.len());
        for (i, ev) in self.events.iter().enumerate() {
            let event = vocab.lookup(&ev.e)?;
            if event == BEGIN_MARKER {
                return Err(Error::InvalidSequence(format!("begin marker `{}` inside a sequence", ev.e)));
            }
            occ.push(EventOccurrence { step: i + 1, time: ev.t, event });
        }
        let mut labels = vec![false; catalog.len()];
        for name in &self.labels {
            labels[catalog.lookup(name)?] = true;
        }
        LabeledSequence::new(occ, labels)
    }
}

pub fn write_sequences<W: Write>(
    mut out: W,
    seqs: &[LabeledSequence],
    vocab: &EventVocabulary,
    catalog: &LabelCatalog,
) -> Result<()> {
    for seq in seqs {
        let rec = SequenceRecord::encode(seq, vocab, catalog)?;
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads records, skipping blank lines. Errors carry the 1-based line number.
pub fn read_sequences<R: BufRead>(
    input: R,
    vocab: &EventVocabulary,
    catalog: &LabelCatalog,
) -> Result<Vec<LabeledSequence>> {
    let mut seqs = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<SequenceRecord>(&line)
            .map_err(Error::from)
            .and_then(|rec| rec.decode(vocab, catalog));
        match parsed {
            Ok(seq) => seqs.push(seq),
            Err(e) => return Err(Error::Record { line: i + 1, source: Box::new(e) }),
        }
    }
    Ok(seqs)
}

pub fn read_vocabulary<R: std::io::Read>(input: R) -> Result<EventVocabulary> {
    Ok(serde_json::from_reader(input)?)
}

pub fn read_catalog<R: std::io::Read>(input: R) -> Result<LabelCatalog> {
    Ok(serde_json::from_reader(input)?)
}
