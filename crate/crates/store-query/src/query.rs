use serde::{Deserialize, Serialize};
use telemetry_model::StoredRecord;

/// Rows per page on the dashboard.
pub const DEFAULT_PAGE_SIZE: usize = 15;
/// Default query window: the last 7 days.
pub const DEFAULT_WINDOW_S: i64 = 7 * 24 * 3600;

/// A paginated range query for one device, newest first.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct QueryRequest {
    pub device_id: String,
    /// Inclusive device-timestamp range.
    pub from: i64,
    pub to: i64,
    /// 1-based page number.
    pub page: usize,
    pub page_size: usize,
}

impl QueryRequest {
    /// Full range for a device with default pagination.
    pub fn new(device_id: impl Into<String>, from: i64, to: i64) -> Self {
        QueryRequest {
            device_id: device_id.into(),
            from,
            to,
            page: 1,
            page_size: DEFAULT_PAGE_SIZE,
        }
    }

    /// The dashboard default: last 7 days ending at `now`.
    pub fn last_7_days(device_id: impl Into<String>, now: i64) -> Self {
        QueryRequest::new(device_id, now - DEFAULT_WINDOW_S, now)
    }

    pub fn with_page(mut self, page: usize, page_size: usize) -> Self {
        self.page = page;
        self.page_size = page_size;
        self
    }
}

/// One page of query results plus the total match count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryPage {
    pub rows: Vec<StoredRecord>,
    /// Matches across the whole range, independent of the page.
    pub total: usize,
    pub page: usize,
    pub page_size: usize,
}

impl QueryPage {
    /// 1-based index of the first row on this page, 0 when empty.
    pub fn first_row_index(&self) -> usize {
        if self.rows.is_empty() {
            0
        } else {
            (self.page - 1) * self.page_size + 1
        }
    }

    /// 1-based index of the last row on this page, 0 when empty.
    pub fn last_row_index(&self) -> usize {
        if self.rows.is_empty() {
            0
        } else {
            self.first_row_index() + self.rows.len() - 1
        }
    }
}
