"""Экспорт результатов в CSV, JSON и XLSX."""
import csv
import io
import json
import logging
import math
import os
from numbers import Integral, Real

import numpy as np

try:
    from openpyxl import Workbook
    from openpyxl.styles import Alignment, Font, PatternFill
    from openpyxl.worksheet.table import Table, TableStyleInfo
    OPENPYXL_AVAILABLE = True
except ImportError:
    OPENPYXL_AVAILABLE = False

logger = logging.getLogger(__name__)


def format_value(value):
    """17 значащих цифр для вещественных, разделитель '.'."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, Integral):
        return str(int(value))
    if isinstance(value, Real):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.17g}"
    return str(value)


def _json_ready(value):
    if isinstance(value, dict):
        return {key: _json_ready(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(item) for item in value]
    if isinstance(value, np.ndarray):
        return _json_ready(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, Integral):
        return int(value)
    if isinstance(value, Real):
        value = float(value)
        return value if math.isfinite(value) else format_value(value)
    return value


def export_path(out_dir, command, seed, extension):
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, f"{command}-{seed}.{extension}")


def render_csv(headers, rows):
    """Текст CSV со строкой заголовка; строки - словари с ключами заголовка."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(headers)
    for row in rows:
        writer.writerow([format_value(row.get(header)) for header in headers])
    return buffer.getvalue()


def write_csv(path, headers, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as csvfile:
            csvfile.write(render_csv(headers, rows))
        logger.info(f"Экспорт CSV: {path} ({len(rows)} строк)")
    except OSError as e:
        logger.error(f"Ошибка экспорта CSV: {e}")
        raise
    return path


def write_json(path, data):
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(_json_ready(data), f, ensure_ascii=False, indent=2)
        logger.info(f"Экспорт JSON: {path}")
    except OSError as e:
        logger.error(f"Ошибка экспорта JSON: {e}")
        raise
    return path


def write_xlsx(path, headers, rows, title="Результаты"):
    """Книга с оформленным заголовком и таблицей в полоску; None, если openpyxl не установлен."""
    if not OPENPYXL_AVAILABLE:
        logger.warning("Модуль openpyxl не установлен, XLSX не создан")
        return None
    try:
        wb = Workbook()
        ws = wb.active
        ws.title = title
        ws.append(list(headers))
        for row in rows:
            ws.append([_json_ready(row.get(header)) for header in headers])
        header_font = Font(bold=True, color="FFFFFF", size=12)
        header_fill = PatternFill(fill_type="solid", fgColor="2196F3")
        for cell in ws[1]:
            cell.font = header_font
            cell.fill = header_fill
            cell.alignment = Alignment(horizontal="center", vertical="center")
        for col in ws.columns:
            max_length = max((len(str(cell.value)) for cell in col if cell.value is not None), default=0)
            ws.column_dimensions[col[0].column_letter].width = min(max_length + 3, 40)
        if rows:
            tab = Table(displayName="Results", ref=ws.dimensions)
            tab.tableStyleInfo = TableStyleInfo(
                name="TableStyleMedium9",
                showFirstColumn=False,
                showLastColumn=False,
                showRowStripes=True,
                showColumnStripes=False
            )
            ws.add_table(tab)
        wb.save(path)
        logger.info(f"Экспорт Excel: {path}")
    except OSError as e:
        logger.error(f"Ошибка экспорта Excel: {e}")
        raise
    return path


def export_table(out_dir, command, seed, headers, rows, summary=None, xlsx=False):
    """Пишет <command>-<seed>.csv, при наличии сводку JSON и по запросу копию XLSX."""
    written = [write_csv(export_path(out_dir, command, seed, "csv"), headers, rows)]
    if summary is not None:
        written.append(write_json(export_path(out_dir, command, seed, "json"), summary))
    if xlsx:
        path = write_xlsx(export_path(out_dir, command, seed, "xlsx"), headers, rows)
        if path:
            written.append(path)
    return written
