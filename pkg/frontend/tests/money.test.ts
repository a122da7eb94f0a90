import { describe, expect, it } from 'vitest';

import { formatMoney, formatThreshold, parseMoneyInput, toCents } from '../src/money.js';

describe('formatMoney', () => {
  it('groups thousands and keeps two fraction digits', () => {
    expect(formatMoney('113400.00')).toBe('$113,400.00');
    expect(formatMoney('0.05')).toBe('$0.05');
    expect(formatMoney('1234567.89')).toBe('$1,234,567.89');
  });

  it('renders credits with a leading minus', () => {
    expect(formatMoney('-20.50')).toBe('-$20.50');
  });

  it('rejects non-wire values', () => {
    expect(() => formatMoney('12.3')).toThrow();
    expect(() => formatMoney('abc')).toThrow();
  });
});

describe('parseMoneyInput', () => {
  it('normalizes user input to the wire form', () => {
    expect(parseMoneyInput('120000')).toBe('120000.00');
    expect(parseMoneyInput('$1,234.5')).toBe('1234.50');
    expect(parseMoneyInput(' 42.07 ')).toBe('42.07');
    expect(parseMoneyInput('-20')).toBe('-20.00');
  });

  it('returns null for sub-cent or junk input', () => {
    expect(parseMoneyInput('1.005')).toBeNull();
    expect(parseMoneyInput('twelve')).toBeNull();
    expect(parseMoneyInput('')).toBeNull();
  });
});

describe('toCents', () => {
  it('converts wire values for display math', () => {
    expect(toCents('113400.00')).toBe(11340000);
    expect(toCents('-0.05')).toBe(-5);
  });
});

describe('formatThreshold', () => {
  it('renders fractions as percentages', () => {
    expect(formatThreshold('0.50')).toBe('50%');
    expect(formatThreshold('0.90')).toBe('90%');
    expect(formatThreshold('1.00')).toBe('100%');
    expect(formatThreshold('1.10')).toBe('110%');
  });
});
